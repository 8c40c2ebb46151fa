//! Syntax tree for one compilation unit.

use serde::{Deserialize, Serialize};

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

/// Unique id of an expression node, used to key analysis side tables.
pub type ExprId = u32;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceModule {
    pub declarations: Vec<TopLevelDecl>,
    /// Next unused expression id.
    pub next_expr_id: ExprId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    User,
    Stdlib,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TopLevelDecl {
    Contract(ContractDecl),
    Behaviour(BehaviourDecl),
    Struct(StructDecl),
    Enum(EnumDecl),
    Trait(TraitDecl),
}

impl TopLevelDecl {
    pub fn span(&self) -> Span {
        match self {
            TopLevelDecl::Contract(c) => c.name.span,
            TopLevelDecl::Behaviour(b) => b.contract.span,
            TopLevelDecl::Struct(s) => s.name.span,
            TopLevelDecl::Enum(e) => e.name.span,
            TopLevelDecl::Trait(t) => t.name.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractDecl {
    pub name: Ident,
    pub conformances: Vec<Ident>,
    pub typestates: Vec<Ident>,
    pub members: Vec<ContractMember>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContractMember {
    Property(VariableDecl),
    Event(EventDecl),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modifier {
    Public,
    Mutating,
    Visible,
}

impl Modifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Modifier::Public => "public",
            Modifier::Mutating => "mutating",
            Modifier::Visible => "visible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub modifiers: Vec<Modifier>,
    pub is_let: bool,
    pub name: Ident,
    pub ty: Option<TypeAnnotation>,
    pub value: Option<Box<Expr>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDecl {
    pub name: Ident,
    pub fields: Vec<VariableDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviourDecl {
    pub contract: Ident,
    pub states: Vec<Ident>,
    pub caller_binding: Option<Ident>,
    pub protections: Vec<Ident>,
    pub members: Vec<FunctionDecl>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructDecl {
    pub name: Ident,
    pub conformances: Vec<Ident>,
    pub members: Vec<StructMember>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StructMember {
    Property(VariableDecl),
    Function(FunctionDecl),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumDecl {
    pub name: Ident,
    pub cases: Vec<Ident>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraitKind {
    Struct,
    Contract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitDecl {
    pub kind: TraitKind,
    pub name: Ident,
    pub members: Vec<TraitMember>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraitMember {
    Function(FunctionDecl),
    Event(EventDecl),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionKind {
    Function,
    Initialiser,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub kind: FunctionKind,
    pub attributes: Vec<Ident>,
    pub modifiers: Vec<Modifier>,
    /// `init` / `fallback` for the special kinds.
    pub name: Ident,
    pub params: Vec<Parameter>,
    pub return_type: Option<TypeAnnotation>,
    /// `None` for signature-only declarations.
    pub body: Option<Block>,
    pub span: Span,
}

impl FunctionDecl {
    pub fn has_modifier(&self, m: Modifier) -> bool {
        self.modifiers.contains(&m)
    }

    pub fn is_payable(&self) -> bool {
        self.attributes.iter().any(|a| a.name == "payable")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub is_implicit: bool,
    pub is_inout: bool,
    pub name: Ident,
    pub ty: TypeAnnotation,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeAnnotation {
    Named { name: Ident, generics: Vec<TypeAnnotation> },
    Array(Box<TypeAnnotation>),
    FixedArray(Box<TypeAnnotation>, u64),
    Dictionary(Box<TypeAnnotation>, Box<TypeAnnotation>),
}

impl TypeAnnotation {
    pub fn span(&self) -> Span {
        match self {
            TypeAnnotation::Named { name, .. } => name.span,
            TypeAnnotation::Array(t) | TypeAnnotation::FixedArray(t, _) | TypeAnnotation::Dictionary(t, _) => t.span(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub statements: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Expr(Expr),
    Return(Option<Expr>),
    Become(Ident),
    Emit { event: Ident, args: Vec<Argument> },
    For { is_let: bool, name: Ident, ty: Option<TypeAnnotation>, iterable: Expr, body: Block },
    If { condition: Expr, then_block: Block, else_block: Option<Block> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    WrapAdd,
    WrapSub,
    WrapMul,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
    Assign,
    AddAssign,
    SubAssign,
    MulAssign,
    DivAssign,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Pow => "**",
            WrapAdd => "&+",
            WrapSub => "&-",
            WrapMul => "&*",
            Eq => "==",
            NotEq => "!=",
            Lt => "<",
            LtEq => "<=",
            Gt => ">",
            GtEq => ">=",
            And => "&&",
            Or => "||",
            Assign => "=",
            AddAssign => "+=",
            SubAssign => "-=",
            MulAssign => "*=",
            DivAssign => "/=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinaryOp> {
        use BinaryOp::*;
        Some(match s {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "**" => Pow,
            "&+" => WrapAdd,
            "&-" => WrapSub,
            "&*" => WrapMul,
            "==" => Eq,
            "!=" => NotEq,
            "<" => Lt,
            "<=" => LtEq,
            ">" => Gt,
            ">=" => GtEq,
            "&&" => And,
            "||" => Or,
            "=" => Assign,
            "+=" => AddAssign,
            "-=" => SubAssign,
            "*=" => MulAssign,
            "/=" => DivAssign,
            _ => return None,
        })
    }

    /// Binding power, higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Pow => 7,
            Mul | Div | WrapMul => 6,
            Add | Sub | WrapAdd | WrapSub => 5,
            Lt | LtEq | Gt | GtEq => 4,
            Eq | NotEq => 3,
            And => 2,
            Or => 1,
            Assign | AddAssign | SubAssign | MulAssign | DivAssign => 0,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinaryOp::Pow || self.is_assignment()
    }

    pub fn is_assignment(self) -> bool {
        use BinaryOp::*;
        matches!(self, Assign | AddAssign | SubAssign | MulAssign | DivAssign)
    }

    /// The arithmetic operator a compound assignment applies.
    pub fn compound_base(self) -> Option<BinaryOp> {
        use BinaryOp::*;
        match self {
            AddAssign => Some(Add),
            SubAssign => Some(Sub),
            MulAssign => Some(Mul),
            DivAssign => Some(Div),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub label: Option<Ident>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Identifier(Ident),
    SelfValue,
    Int(String),
    Fraction(String),
    Bool(bool),
    Address(String),
    Str(String),
    EmptyArray,
    EmptyDictionary,
    InOut(Box<Expr>),
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Member { base: Box<Expr>, name: Ident },
    Subscript { base: Box<Expr>, index: Box<Expr> },
    Call { receiver: Option<Box<Expr>>, name: Ident, args: Vec<Argument> },
    VarDecl(VariableDecl),
    Bracketed(Box<Expr>),
    Range { start: Box<Expr>, end: Box<Expr>, inclusive: bool },
    Try(Box<Expr>),
}

impl Expr {
    /// Strips brackets, returning the wrapped expression.
    pub fn unbracketed(&self) -> &Expr {
        match &self.kind {
            ExprKind::Bracketed(inner) => inner.unbracketed(),
            _ => self,
        }
    }

    pub fn as_call(&self) -> Option<(&Option<Box<Expr>>, &Ident, &[Argument])> {
        match &self.unbracketed().kind {
            ExprKind::Call { receiver, name, args } => Some((receiver, name, args)),
            ExprKind::Try(inner) => inner.as_call(),
            _ => None,
        }
    }
}

/// Mutable walk over every expression in a block, in source order.
pub fn visit_block_exprs_mut(block: &mut Block, f: &mut dyn FnMut(&mut Expr)) {
    for stmt in &mut block.statements {
        visit_stmt_exprs_mut(stmt, f);
    }
}

fn visit_stmt_exprs_mut(stmt: &mut Stmt, f: &mut dyn FnMut(&mut Expr)) {
    match &mut stmt.kind {
        StmtKind::Expr(e) => visit_expr_mut(e, f),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                visit_expr_mut(e, f)
            }
        }
        StmtKind::Become(_) => {}
        StmtKind::Emit { args, .. } => args.iter_mut().for_each(|a| visit_expr_mut(&mut a.value, f)),
        StmtKind::For { iterable, body, .. } => {
            visit_expr_mut(iterable, f);
            visit_block_exprs_mut(body, f);
        }
        StmtKind::If { condition, then_block, else_block } => {
            visit_expr_mut(condition, f);
            visit_block_exprs_mut(then_block, f);
            if let Some(b) = else_block {
                visit_block_exprs_mut(b, f);
            }
        }
    }
}

pub fn visit_expr_mut(expr: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(expr);
    match &mut expr.kind {
        ExprKind::InOut(e) | ExprKind::Bracketed(e) | ExprKind::Try(e) => visit_expr_mut(e, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_expr_mut(lhs, f);
            visit_expr_mut(rhs, f);
        }
        ExprKind::Member { base, .. } => visit_expr_mut(base, f),
        ExprKind::Subscript { base, index } => {
            visit_expr_mut(base, f);
            visit_expr_mut(index, f);
        }
        ExprKind::Call { receiver, args, .. } => {
            if let Some(r) = receiver {
                visit_expr_mut(r, f);
            }
            args.iter_mut().for_each(|a| visit_expr_mut(&mut a.value, f));
        }
        ExprKind::VarDecl(decl) => {
            if let Some(v) = &mut decl.value {
                visit_expr_mut(v, f);
            }
        }
        ExprKind::Range { start, end, .. } => {
            visit_expr_mut(start, f);
            visit_expr_mut(end, f);
        }
        _ => {}
    }
}
