#[path = "support/oracles.rs"]
mod oracles;

fn run(check: oracles::Check) {
    if let Err(e) = check {
        panic!("{e}");
    }
}

#[test]
fn wilcoxon_exact_p_matches_enumeration() {
    run(oracles::wilcoxon_enumeration());
}

#[test]
fn cliffs_delta_matches_rank_sum() {
    run(oracles::cliffs_delta_brute());
}

#[test]
fn spearman_matches_hand_formula() {
    run(oracles::spearman_brute());
}

#[test]
fn kendalls_w_matches_friedman() {
    run(oracles::kendalls_w_brute());
}

#[test]
fn epsilon_sq_matches_variance_ratio() {
    run(oracles::epsilon_sq_brute());
}

#[test]
fn holm_matches_definition() {
    run(oracles::holm_brute());
}

#[test]
fn tails_match_high_precision_grid() {
    run(oracles::distribution_tails());
}

#[test]
fn icc_matches_sums_of_squares() {
    run(oracles::icc_identities());
}
