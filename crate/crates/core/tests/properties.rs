mod suites;

fn check(name: &str) {
    let (_, suite) = suites::ALL.iter().find(|(n, _)| *n == name).unwrap();
    if let Err(e) = suite() {
        panic!("{name}: {e}");
    }
}

#[test]
fn row_sum_invariants() {
    check("row-sum invariants");
}

#[test]
fn projection_dominance() {
    check("projection dominance");
}

#[test]
fn american_dominates_european() {
    check("american >= european");
}

#[test]
fn brennan_schwartz_matches_psor() {
    check("brennan-schwartz == psor");
}

#[test]
fn european_closed_form() {
    check("european closed form");
}

#[test]
fn polynomial_derivatives() {
    check("polynomial derivatives");
}
