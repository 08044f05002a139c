use bapcs::distributions::IepParams;
use bapcs::gof::{
    fit_all, fit_model, info_criteria, ks_pvalue, ks_statistic, plot_data, scaled_ttt, sturges_bins,
    write_plot_data, write_report_csv, DataSet, FittedModel, ModelFamily, REPORT_HEADER,
};
use bapcs::rng::SeedStream;
use proptest::prelude::*;
use rand::Rng;

fn carbon() -> DataSet {
    DataSet::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/carbon_fibres.txt")).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

#[test]
fn carbon_fibre_table() {
    let data = carbon();
    assert_eq!(data.n(), 69);
    let reports = fit_all(&data).unwrap();
    let names: Vec<_> = reports.iter().map(|r| r.model.name()).collect();
    assert_eq!(names, ["IEP", "GP", "EP", "IER", "IL"]);
    // (AIC, BIC, CAIC, HQIC, K-S, p-value) as tabulated for the carbon fibres.
    let table: [[f64; 6]; 5] = [
        [108.6455, 113.1138, 115.1138, 110.4182, 0.0755, 0.8266],
        [193.3750, 197.8433, 199.8433, 195.1477, 0.3623, 2.716e-8],
        [134.6356, 139.1038, 141.1038, 136.4083, 0.1451, 0.1095],
        [160.1693, 164.6375, 166.6375, 161.9420, 0.2210, 0.0024],
        [198.2299, 202.6981, 204.6981, 200.0026, 0.3757, 6.933e-9],
    ];
    for (r, row) in reports.iter().zip(&table) {
        let crit_tol = if r.model == ModelFamily::Il { 0.5 } else { 0.02 };
        for (got, want) in [r.aic, r.bic, r.caic, r.hqic].iter().zip(&row[..4]) {
            assert!((got - want).abs() <= crit_tol, "{}: {got} vs {want}", r.model.name());
        }
        assert!((r.ks_stat - row[4]).abs() <= 2e-3, "{}: {}", r.model.name(), r.ks_stat);
        assert!(close(r.ks_pvalue, row[5], 0.05), "{}: {}", r.model.name(), r.ks_pvalue);
    }
    let iep = &reports[0];
    assert!(close(iep.params[0], 43.8478, 1e-4) && close(iep.params[1], 7.6876, 1e-4));
    let gp = &reports[1];
    assert_eq!(gp.params[0], 0.0);
    assert!((gp.params[1] - 1.4510).abs() < 5e-4);
    let ep = &reports[2];
    assert!(close(ep.params[0], 3.9902, 1e-3) && close(ep.params[1], 19.7892, 1e-3));
    let ier = &reports[3];
    assert!(close(ier.params[0], 1.2358, 1e-3) && close(ier.params[1], 1.2322, 1e-3));
    for r in &reports[1..] {
        assert!(r.aic > iep.aic && r.bic > iep.bic && r.caic > iep.caic && r.hqic > iep.hqic);
        assert!(r.ks_stat > iep.ks_stat);
    }
}

#[test]
fn information_criteria_formulas() {
    let c = info_criteria(-50.0, 2, 69).unwrap();
    let ln_n = 69f64.ln();
    assert!((c.aic - 104.0).abs() < 1e-12);
    assert!((c.bic - (100.0 + 2.0 * ln_n)).abs() < 1e-12);
    assert!((c.caic - (100.0 + 2.0 * (ln_n + 1.0))).abs() < 1e-12);
    assert!(c.aic < c.hqic && c.hqic < c.bic && c.bic < c.caic);
    assert!((c.hqic - (100.0 + 4.0 * ln_n.ln())).abs() < 1e-12);
}

#[test]
fn fitted_likelihoods_beat_random_nearby_points() {
    let data = carbon();
    let mut rng = SeedStream::new(8).rng();
    for family in [ModelFamily::Iep, ModelFamily::Ep, ModelFamily::Ier] {
        let fit = fit_model(&data, family).unwrap();
        let best = fit.loglik(data.values());
        let [a, b] = fit.params();
        for _ in 0..100 {
            let pa = a * (1.0 + rng.random_range(-0.2..0.2));
            let pb = b * (1.0 + rng.random_range(-0.2..0.2));
            let other = match family {
                ModelFamily::Iep => FittedModel::Iep(IepParams::new(pa, pb).unwrap()),
                ModelFamily::Ep => FittedModel::Competitor(bapcs::distributions::CompetitorModel::exponentiated_pareto(pa, pb).unwrap()),
                _ => FittedModel::Competitor(bapcs::distributions::CompetitorModel::inverted_exp_rayleigh(pa, pb).unwrap()),
            };
            assert!(other.loglik(data.values()) <= best + 1e-9);
        }
    }
}

#[test]
fn report_csv_has_the_table_header() {
    let reports = fit_all(&carbon()).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&reports, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), REPORT_HEADER.join(","));
    assert_eq!(lines.count(), 5);
}

#[test]
fn plot_series_are_consistent() {
    let data = carbon();
    let reports = fit_all(&data).unwrap();
    let plot = plot_data(&data, &reports).unwrap();
    assert_eq!(plot.models.len(), 5);
    assert_eq!(plot.hist.len(), sturges_bins(69));
    assert_eq!(sturges_bins(69), 8);
    let mass: f64 = plot.hist.iter().map(|[lo, hi, d]| (hi - lo) * d).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    let ecdf_last = plot.ecdf.last().unwrap();
    assert_eq!(ecdf_last[1], 1.0);
    assert_eq!(ecdf_last.len(), 2 + 5);
    for series in plot.pp.iter().chain(&plot.qq) {
        assert_eq!(series.len(), 69);
    }
    let ttt = &plot.ttt;
    assert_eq!(ttt.last().unwrap(), &[1.0, 1.0]);
    // Increasing failure rate data lies above the diagonal.
    assert!(ttt.iter().all(|[u, v]| v + 1e-12 >= *u));

    let dir = tempfile::tempdir().unwrap();
    write_plot_data(&plot, dir.path()).unwrap();
    for name in ["ecdf.csv", "hist.csv", "pdf.csv", "ttt.csv", "pp_IEP.csv", "qq_IL.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.lines().count() > 1, "{name}");
    }
}

#[test]
fn scaled_ttt_of_exponential_data_hugs_the_diagonal() {
    let mut rng = SeedStream::new(3).rng();
    let mut xs: Vec<f64> = (0..20_000).map(|_| -rng.random_range(1e-300f64..1.0).ln()).collect();
    xs.sort_by(f64::total_cmp);
    let ttt = scaled_ttt(&xs);
    assert!(ttt.iter().all(|[u, v]| (u - v).abs() < 0.03));
}

#[test]
fn pp_plot_of_a_correct_model_lies_in_the_dkw_band() {
    let p = IepParams::new(3.5, 2.25).unwrap();
    let mut rng = SeedStream::new(12).rng();
    let n = 2000;
    let values: Vec<f64> = (0..n).map(|_| p.quantile(rng.random_range(0.0..1.0)).unwrap()).collect();
    let data = DataSet::new(values).unwrap();
    let fit = FittedModel::Iep(p);
    let report = bapcs::gof::report(&data, fit).unwrap();
    let plot = plot_data(&data, &[report]).unwrap();
    let eps = ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt() + 1.0 / (n as f64 + 1.0);
    assert!(plot.pp[0].iter().all(|[e, f]| (e - f).abs() <= eps));
}

#[test]
fn parse_reports_positions() {
    let err = DataSet::parse("1.0 2.0\n3.0 abc\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('2') && msg.contains('5'), "{msg}");
    assert!(DataSet::parse("1.0, -2.0").is_err());
    assert!(DataSet::parse("# only a comment\n4.0").is_err());
    let d = DataSet::parse("# header\n1.5, 2.5\n0.5\n").unwrap();
    assert_eq!(d.sorted(), [0.5, 1.5, 2.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ks_statistic_is_invariant_under_the_probability_transform(seed in any::<u64>(), n in 5usize..200) {
        let p = IepParams::new(3.5, 2.25).unwrap();
        let mut rng = SeedStream::new(seed).rng();
        let mut xs: Vec<f64> = (0..n).map(|_| p.quantile(rng.random_range(0.001..0.999)).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let d = ks_statistic(&xs, |x| p.cdf(x).unwrap());
        let mut us: Vec<f64> = xs.iter().map(|&x| p.cdf(x).unwrap()).collect();
        us.sort_by(f64::total_cmp);
        let d_u = ks_statistic(&us, |u| u);
        prop_assert!((d - d_u).abs() < 1e-12);
        prop_assert!(d > 0.0 && d <= 1.0);
        let pv = ks_pvalue(d, n);
        prop_assert!((0.0..=1.0).contains(&pv));
    }
}
