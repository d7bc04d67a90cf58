#[test]
fn probe_search() {
    use periodbounds::constants::PExponent;
    use periodbounds::optimizer::search;
    for pv in [2.0f64, 1.5, 3.0] {
        let p = PExponent::new(pv).unwrap();
        let t0 = std::time::Instant::now();
        let r = search(p, 2, 3, 20_000, 1).unwrap();
        println!(
            "p {pv}: best_TL = {:.6} lower = {:.6} gap = {:+.4} in {:?}",
            r.best_tl, r.lower_bound, r.certificate_gap, t0.elapsed()
        );
    }
}
