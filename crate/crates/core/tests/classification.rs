//! Classification verdicts for the reference laws.
//!
//! The expected memberships:
//!
//! | law            | J | S | L | D | OS | OL | K | K* |
//! |----------------|---|---|---|---|----|----|---|----|
//! | Pareto(1,1)    | + | + | + | + | +  | +  | + | +  |
//! | Pareto(2,1)    | + | + | + | + | +  | +  | + | +  |
//! | Exp(1)         | − | − | − | − | −  | +  | − | −  |
//! | Peter-and-Paul | + | − | − | + | +  | +  | + | +  |
//! | BigJumpLight   | + | − | − | − | +  | +  | − | −  |

use bigjump_core::classify::{classify, form_consistency, ClassId, ClassifyConfig, Verdict};
use bigjump_core::dist::Dist;
use bigjump_core::error::Error;
use bigjump_core::grid::GridSpec;
use bigjump_core::ratio::{estimate_cf, CfValue};

fn verdict_row(dist: &Dist, config: &ClassifyConfig) -> [Verdict; 8] {
    let report = classify(dist, config).expect("classification must run");
    assert!(
        report.conflicts.is_empty(),
        "inclusion conflicts for {dist:?}: {:?}",
        report.conflicts
    );
    [
        report.verdict(ClassId::J),
        report.verdict(ClassId::S),
        report.verdict(ClassId::L),
        report.verdict(ClassId::D),
        report.verdict(ClassId::Os),
        report.verdict(ClassId::Ol),
        report.verdict(ClassId::K),
        report.verdict(ClassId::KStar),
    ]
}

const M: Verdict = Verdict::Member;
const N: Verdict = Verdict::NonMember;

#[test]
fn pareto_one_is_member_of_everything() {
    let cfg = ClassifyConfig::default();
    let row = verdict_row(&Dist::pareto(1.0, 1.0).unwrap(), &cfg);
    assert_eq!(row, [M; 8], "Pareto(1,1) row mismatch: {row:?}");
}

#[test]
fn pareto_two_is_member_of_everything() {
    let cfg = ClassifyConfig::default();
    let row = verdict_row(&Dist::pareto(2.0, 1.0).unwrap(), &cfg);
    assert_eq!(row, [M; 8], "Pareto(2,1) row mismatch: {row:?}");
}

#[test]
fn exponential_is_only_o_long_tailed() {
    let cfg = ClassifyConfig::default();
    let d = Dist::exponential(1.0).unwrap();
    let row = verdict_row(&d, &cfg);
    assert_eq!(row, [N, N, N, N, N, M, N, N], "Exp(1) row mismatch: {row:?}");
    // the shift-ratio probe identifies the decay rate γ = 1
    let report = classify(&d, &cfg).unwrap();
    let gamma = report.gamma().expect("gamma must be fitted");
    assert!((gamma - 1.0).abs() < 0.05, "gamma = {gamma}");
}

#[test]
fn peter_paul_is_dominated_but_not_long_tailed() {
    let cfg = ClassifyConfig::default();
    let row = verdict_row(&Dist::PeterPaul, &cfg);
    assert_eq!(row, [M, N, N, M, M, M, M, M], "Peter-and-Paul row mismatch: {row:?}");
}

#[test]
fn bigjumplight_is_a_light_tailed_member() {
    let cfg = ClassifyConfig::default();
    let d = Dist::BigJumpLight;
    let row = verdict_row(&d, &cfg);
    assert_eq!(row, [M, N, N, N, M, M, N, N], "BigJumpLight row mismatch: {row:?}");
    let report = classify(&d, &cfg).unwrap();
    let gamma = report.gamma().expect("gamma must be fitted");
    assert!((gamma - 1.0).abs() < 0.15, "gamma = {gamma}");
}

#[test]
fn bounded_support_is_refused() {
    let cfg = ClassifyConfig::default();
    assert!(matches!(
        classify(&Dist::Dirac { point: 1.0 }, &cfg),
        Err(Error::BoundedSupport)
    ));
    let emp = Dist::empirical(vec![1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(classify(&emp, &cfg), Err(Error::BoundedSupport)));
}

#[test]
fn bigjump_cf_estimate_hits_c_times_pi() {
    // c_F = C·π; the window trend extrapolation must land within 5% on the
    // x_max = 60 grid even though the raw ratio is still ~7% high there.
    let c = bigjump_core::dist::bigjump_normalizer();
    let target = c * std::f64::consts::PI;
    let cf = estimate_cf(&Dist::BigJumpLight, &GridSpec::new(60.0)).unwrap();
    let got = cf.finite().expect("finite c_F for BigJumpLight");
    assert!(
        (got - target).abs() / target < 0.05,
        "c_F = {got}, target {target}"
    );
}

#[test]
fn peter_paul_cf_sees_the_dyadic_spikes() {
    // the two-fold ratio spikes just above each atom; enriched sampling must
    // catch them, putting the limsup near 4 rather than the on-grid 2
    let cf = estimate_cf(&Dist::PeterPaul, &GridSpec::new(1e4)).unwrap();
    let got = cf.finite().unwrap();
    assert!(got > 3.0 && got < 4.5, "c_F = {got}");
}

#[test]
fn form_consistency_pareto() {
    let cfg = ClassifyConfig::default();
    let fc = form_consistency(&Dist::pareto(1.0, 1.0).unwrap(), 2, &cfg).unwrap();
    assert_eq!(fc.second_verdict, Verdict::Member);
    assert_eq!(fc.max_verdict, Verdict::Member);
    assert_eq!(fc.next_n_verdict, Verdict::Member, "n=3 must agree");
}

#[test]
fn form_consistency_exponential() {
    let cfg = ClassifyConfig::default();
    let fc = form_consistency(&Dist::exponential(1.0).unwrap(), 2, &cfg).unwrap();
    assert_eq!(fc.second_verdict, Verdict::NonMember);
    assert_eq!(fc.max_verdict, Verdict::NonMember);
}

#[test]
fn form_consistency_bigjumplight_n2_vs_n3() {
    let cfg = ClassifyConfig::default();
    let fc = form_consistency(&Dist::BigJumpLight, 2, &cfg).unwrap();
    assert_eq!(fc.second_verdict, Verdict::Member);
    assert_eq!(fc.max_verdict, Verdict::Member);
    assert_eq!(fc.next_n_verdict, Verdict::Member, "n=3 must agree");
}
