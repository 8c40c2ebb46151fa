//! Injective function-name mangling: `Type$function$T1_T2`, with `&` after
//! an inout parameter type.

use crate::environment::Type;

fn escape(out: &mut String, ident: &str) {
    for c in ident.chars() {
        match c {
            '_' => out.push_str("_0"),
            '$' => out.push_str("_1"),
            c => out.push(c),
        }
    }
}

fn type_name(out: &mut String, ty: &Type) {
    match ty {
        Type::Array(t) => {
            out.push('[');
            type_name(out, t);
            out.push(']');
        }
        Type::FixedArray(t, n) => {
            out.push('[');
            type_name(out, t);
            out.push(';');
            out.push_str(&n.to_string());
            out.push(']');
        }
        Type::Dictionary(k, v) => {
            out.push('[');
            type_name(out, k);
            out.push(':');
            type_name(out, v);
            out.push(']');
        }
        other => escape(out, &other.to_string()),
    }
}

pub fn mangle(type_name_: &str, function: &str, params: &[(Type, bool)]) -> String {
    let mut out = String::new();
    escape(&mut out, type_name_);
    out.push('$');
    escape(&mut out, function);
    out.push('$');
    for (i, (ty, inout)) in params.iter().enumerate() {
        if i > 0 {
            out.push('_');
        }
        type_name(&mut out, ty);
        if *inout {
            out.push('&');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(mangle("Bank", "transfer", &[(Type::Int, false), (Type::Address, false)]), "Bank$transfer$Int_Address");
        assert_eq!(
            mangle("Wei", "transfer", &[(Type::Named("Wei".into()), true), (Type::Int, false)]),
            "Wei$transfer$Wei&_Int"
        );
        assert_eq!(mangle("Bank", "getManager", &[]), "Bank$getManager$");
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a_][ab_$]{0,2}"
    }

    fn ty() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![
            Just(Type::Int),
            Just(Type::Address),
            Just(Type::Bool),
            Just(Type::String),
            ident().prop_map(Type::Named),
        ];
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| Type::Array(Box::new(t))),
                (inner.clone(), 1u64..4).prop_map(|(t, n)| Type::FixedArray(Box::new(t), n)),
                (inner.clone(), inner).prop_map(|(k, v)| Type::Dictionary(Box::new(k), Box::new(v))),
            ]
        })
    }

    proptest! {
        #[test]
        fn injective(a in (ident(), ident(), proptest::collection::vec((ty(), any::<bool>()), 0..3)),
                     b in (ident(), ident(), proptest::collection::vec((ty(), any::<bool>()), 0..3))) {
            if a != b {
                prop_assert_ne!(mangle(&a.0, &a.1, &a.2), mangle(&b.0, &b.1, &b.2));
            }
        }
    }
}
