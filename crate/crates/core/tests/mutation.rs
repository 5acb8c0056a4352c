use std::sync::atomic::Ordering;
use swvortex::cli;
use swvortex::lattice::HODGE_SIGN_BUG;
use swvortex::verify::{run_suite, Suite};

#[test]
fn hodge_sign_bug_is_caught_by_the_adjoint_suite() {
    assert_eq!(cli::run(["swv", "verify", "--suite", "adjoint", "--seed", "42"]), 0);
    HODGE_SIGN_BUG.store(true, Ordering::Relaxed);
    let failed: Vec<String> =
        run_suite(Suite::Adjoint, 42).unwrap().into_iter().filter(|c| !c.pass).map(|c| c.check).collect();
    let code = cli::run(["swv", "verify", "--suite", "adjoint", "--seed", "42"]);
    HODGE_SIGN_BUG.store(false, Ordering::Relaxed);
    assert_eq!(code, 1);
    assert!(failed.iter().any(|c| c == "adjoint.hodge_curl"), "{failed:?}");
}
