mod common;

#[test]
fn every_category_has_a_case() {
    let cases = common::golden_cases();
    assert!(cases.len() >= 18);
    let prefixes = ["E-PROT", "E-MUT", "W-MUT", "E-INIT", "E-DECL", "E-TYPE"];
    for p in prefixes {
        assert!(cases.iter().any(|c| c.code.starts_with(p)), "no case for {p}");
    }
}

#[test]
fn golden_suite() {
    let failures: Vec<String> = common::golden_cases().iter().filter_map(|c| common::check_golden(c).err()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}
