//! Compilation driver: library and user sources through every analysis pass.

use crate::analysis::{self, Annotations};
use crate::diagnostics::{self, Diagnostic};
use crate::environment::{build_environment, Environment};
use crate::frontend::ast::{Origin, SourceModule};
use crate::frontend::lexer::{tokenize_with, LexOptions};
use crate::frontend::parser::Parser;
use crate::lowering::ir::IRProgram;
use crate::lowering::lower::lower;
use crate::stdlib::{self, StdlibMode};

/// Parses library sources for `mode` followed by `user` `(name, text)` pairs
/// into one module. Returns the module, the file names by index, and syntax
/// diagnostics.
pub fn parse_sources(user: &[(&str, &str)], mode: StdlibMode) -> (SourceModule, Vec<String>, Vec<Diagnostic>) {
    let mut inputs: Vec<(&str, &str, Origin)> =
        stdlib::sources(mode).into_iter().map(|(n, s)| (n, s, Origin::Stdlib)).collect();
    inputs.extend(user.iter().map(|&(n, s)| (n, s, Origin::User)));
    let files: Vec<String> = inputs.iter().map(|(n, _, _)| n.to_string()).collect();
    let mut module = SourceModule::default();
    let mut diags = Vec::new();
    for (i, (_, text, origin)) in inputs.iter().enumerate() {
        let tokens = tokenize_with(text, i as u16, LexOptions { allow_dollar: *origin == Origin::Stdlib });
        let mut parser = Parser::new(tokens, &files, *origin, module.next_expr_id);
        module.declarations.extend(parser.parse_declarations());
        module.next_expr_id = parser.next_expr_id();
        diags.extend(parser.into_diagnostics());
    }
    (module, files, diags)
}

/// A fully analysed program.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub module: SourceModule,
    pub files: Vec<String>,
    pub env: Environment,
    pub annotations: Annotations,
    /// Sorted by file, line, column and pass.
    pub diagnostics: Vec<Diagnostic>,
}

impl Analysis {
    pub fn has_errors(&self) -> bool {
        diagnostics::has_errors(&self.diagnostics)
    }
}

pub fn analyze(user: &[(&str, &str)], mode: StdlibMode) -> Analysis {
    let (mut module, files, mut diags) = parse_sources(user, mode);
    diags.extend(analysis::traits::resolve_traits(&mut module, &files));
    let (env, d) = build_environment(&module, &files);
    diags.extend(d);
    let (ann, d) = analysis::typeck::type_check(&module, &env, &files);
    diags.extend(d);
    diags.extend(analysis::protections::check_protections(&module, &env, &ann, &files));
    diags.extend(analysis::mutation::check_mutation(&module, &env, &ann, &files));
    diags.extend(analysis::init::check_initialisation(&module, &env, &ann, &files));
    diags.extend(analysis::payable::check_declarations(&module, &env, &ann, &files));
    diagnostics::sort(&mut diags, &files);
    Analysis { module, files, env, annotations: ann, diagnostics: diags }
}

/// Analyses `user` and lowers it when analysis reports no errors. Warnings
/// are returned alongside the program.
pub fn compile(user: &[(&str, &str)], mode: StdlibMode) -> Result<(IRProgram, Analysis), Analysis> {
    let a = analyze(user, mode);
    if a.has_errors() {
        return Err(a);
    }
    Ok((lower(&a), a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(a: &Analysis) -> Vec<String> {
        a.diagnostics.iter().map(|d| d.render_located()).collect()
    }

    #[test]
    fn corpus_is_clean() {
        for (name, src) in [
            ("bank.flint", include_str!("../corpus/bank.flint")),
            ("simple_dao.flint", include_str!("../corpus/simple_dao.flint")),
        ] {
            let a = analyze(&[(name, src)], StdlibMode::Full);
            assert!(!a.has_errors(), "{:#?}", errors(&a));
        }
        let a = analyze(&[("asset.flint", include_str!("../corpus/asset.flint"))], StdlibMode::GlobalsOnly);
        assert!(!a.has_errors(), "{:#?}", errors(&a));
    }

    #[test]
    fn corpus_lowers() {
        let (p, _) = compile(&[("bank.flint", include_str!("../corpus/bank.flint"))], StdlibMode::Full).unwrap();
        let bank = p.contract("Bank").unwrap();
        let slots: Vec<(&str, u64)> = bank.layout.iter().map(|l| (l.name.as_str(), l.slot)).collect();
        assert_eq!(slots, [("manager", 0), ("balances", 1), ("accounts", 2), ("lastIndex", 3), ("totalDonations", 4)]);
        let text = crate::lowering::printer::print_program(&p);
        assert!(text.contains("#pragma slot 0 manager"));
        assert_eq!(IRProgram::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn stdlib_alone_is_clean() {
        let a = analyze(&[], StdlibMode::Full);
        assert!(a.diagnostics.is_empty(), "{:#?}", errors(&a));
    }
}
