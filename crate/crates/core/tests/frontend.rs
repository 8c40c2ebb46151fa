mod common;

use flint_core::frontend::printer::print_module;
use flint_core::pipeline::parse_sources;
use flint_core::stdlib::StdlibMode;

fn reprint(name: &str, src: &str) -> String {
    let (module, _, diags) = parse_sources(&[(name, src)], StdlibMode::None);
    assert!(diags.is_empty(), "{name}: {diags:#?}");
    print_module(&module)
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for name in ["bank.flint", "simple_dao.flint", "asset.flint", "counter.flint", "atom.flint"] {
        let once = reprint(name, &common::corpus(name));
        let twice = reprint(name, &once);
        assert_eq!(once, twice, "{name}");
    }
}

#[test]
fn dao_shape() {
    use flint_core::frontend::ast::TopLevelDecl;
    let (module, _, diags) = parse_sources(&[("dao", &common::corpus("simple_dao.flint"))], StdlibMode::None);
    assert!(diags.is_empty());
    let count = |f: fn(&TopLevelDecl) -> bool| module.declarations.iter().filter(|d| f(d)).count();
    assert_eq!(count(|d| matches!(d, TopLevelDecl::Struct(_))), 1);
    assert_eq!(count(|d| matches!(d, TopLevelDecl::Contract(_))), 1);
    assert_eq!(count(|d| matches!(d, TopLevelDecl::Behaviour(_))), 6);
}

#[test]
fn golden_sources_parse_with_recovery() {
    for case in common::golden_cases() {
        let (_, _, diags) = parse_sources(&[("case", &case.fixed)], StdlibMode::None);
        assert!(diags.is_empty(), "{}: {diags:#?}", case.name);
    }
}
