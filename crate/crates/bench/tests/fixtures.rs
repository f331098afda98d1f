use linrec_bench::{block, ones, operator, return_set, triangular, x0_vector};
use linrec_core::cyclicity::krylov_rank;
use linrec_core::density::longest_ap;

#[test]
fn fixture_vector_lies_in_x0() {
    let op = operator();
    assert!(!op.x0_classes(&x0_vector(&op)).is_empty());
}

#[test]
fn fixture_set_and_matrix_are_well_formed() {
    let s = return_set(1000, 97);
    assert!(longest_ap(&s) >= 10);
    assert_eq!(krylov_rank(&triangular(8), &ones(8)).unwrap(), 8);
    assert_eq!(block(7).period(), 49);
}
