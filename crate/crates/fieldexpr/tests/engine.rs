use fieldexpr::{Chart, Expr, ExprError, PointSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn test_chart() -> Chart {
    let mut b = Chart::builder();
    b.coord("u").unwrap();
    b.coord("v").unwrap();
    b.coord("x").unwrap();
    b.coord("y").unwrap();
    b.param("a", 0.5, 2.0).unwrap();
    b.param("b", -1.0, 1.0).unwrap();
    b.build().unwrap()
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn leaf(&mut self, chart: &Chart) -> Expr {
        match self.rng.gen_range(0..8u32) {
            0..=2 => {
                let k = self.rng.gen_range(0..chart.dim());
                chart.sym(&chart.coords()[k].name.clone()).unwrap()
            }
            3 => {
                let k = self.rng.gen_range(0..chart.params().len());
                chart.sym(&chart.params()[k].name.clone()).unwrap()
            }
            4 => Expr::int(self.rng.gen_range(1..=3)),
            5 => Expr::num([0.5, 0.25, 1.5][self.rng.gen_range(0..3usize)]),
            6 => Expr::i(),
            _ => Expr::pi(),
        }
    }

    /// Transcendental arguments are damped so nested values stay moderate;
    /// expressions that still evaluate badly are rejected by the caller.
    fn damped(&mut self, chart: &Chart, depth: usize) -> Expr {
        Expr::mul(Expr::num(0.25), self.gen(chart, depth - 1))
    }

    /// Argument with real part bounded below by 2, safe for ln and sqrt.
    fn positive(&mut self, chart: &Chart, depth: usize) -> Expr {
        let g = self.gen(chart, depth - 1);
        Expr::add(Expr::num(3.0), Expr::mul(g.clone(), Expr::conj(g)))
    }

    fn gen(&mut self, chart: &Chart, depth: usize) -> Expr {
        if depth == 0 {
            return self.leaf(chart);
        }
        match self.rng.gen_range(0..14u32) {
            0 | 1 => Expr::add(self.gen(chart, depth - 1), self.gen(chart, depth - 1)),
            2 => Expr::sub(self.gen(chart, depth - 1), self.gen(chart, depth - 1)),
            3 | 4 => Expr::mul(self.gen(chart, depth - 1), self.gen(chart, depth - 1)),
            5 => Expr::div(self.gen(chart, depth - 1), self.positive(chart, depth)),
            6 => Expr::sin(self.damped(chart, depth)),
            7 => Expr::cos(self.damped(chart, depth)),
            8 => Expr::exp(self.damped(chart, depth)),
            9 => Expr::tan(self.damped(chart, depth)),
            10 => Expr::sec(self.damped(chart, depth)),
            11 => Expr::pow(self.gen(chart, depth - 1), [2.0, 3.0][self.rng.gen_range(0..2usize)]),
            12 => Expr::sqrt(self.positive(chart, depth)),
            _ => Expr::ln(self.positive(chart, depth)),
        }
    }
}

fn shifted(p: &PointSample, coord: usize, h: f64) -> PointSample {
    let mut q = p.clone();
    q.coords[coord] += h;
    q
}

/// Accepts an expression only if it and all its coordinate derivatives
/// evaluate to moderate finite values at every sample, including the
/// finite-difference stencil points.
fn well_behaved(chart: &Chart, e: &Expr, points: &[PointSample]) -> bool {
    const CAP: f64 = 1e6;
    for p in points {
        let Ok(v) = chart.eval(e, p) else { return false };
        if v.norm() > CAP {
            return false;
        }
        for j in 0..chart.dim() {
            let d = chart.diff(e, j);
            let Ok(dv) = chart.eval(&d, p) else { return false };
            if dv.norm() > CAP {
                return false;
            }
            let h = 1e-6 * (1.0 + p.coords[j].abs());
            for s in [-h, h] {
                let Ok(fv) = chart.eval(e, &shifted(p, j, s)) else {
                    return false;
                };
                if fv.norm() > CAP {
                    return false;
                }
            }
        }
    }
    true
}

fn sample_set(chart: &Chart, count: usize, seed: u64) -> Vec<PointSample> {
    chart.sample_points(count, seed).unwrap()
}

#[test]
fn derivatives_match_central_differences() {
    let chart = test_chart();
    let points = sample_set(&chart, 3, 11);
    let mut gen = Gen::new(20260816);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut worst: f64 = 0.0;
    while accepted < 100 {
        attempts += 1;
        assert!(attempts < 5000, "generator rejected too many expressions");
        let e = gen.gen(&chart, 4);
        if !well_behaved(&chart, &e, &points) {
            continue;
        }
        accepted += 1;
        for p in &points {
            for j in 0..chart.dim() {
                let d = chart.diff(&e, j);
                let sym = chart.eval(&d, p).unwrap();
                let h = 1e-6 * (1.0 + p.coords[j].abs());
                let fp = chart.eval(&e, &shifted(p, j, h)).unwrap();
                let fm = chart.eval(&e, &shifted(p, j, -h)).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let err = (fd - sym).norm() / (1.0 + fd.norm().max(sym.norm()));
                worst = worst.max(err);
                assert!(
                    err < 1e-6,
                    "derivative mismatch: coord {j}, err {err:.3e}\nexpr: {}",
                    chart.print(&e)
                );
            }
        }
    }
    eprintln!("checked {accepted} expressions ({attempts} drawn), worst rel err {worst:.3e}");
}

#[test]
fn printer_round_trips_through_parser() {
    let chart = test_chart();
    let points = sample_set(&chart, 5, 12);
    let mut gen = Gen::new(987654321);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < 100 {
        attempts += 1;
        assert!(attempts < 5000);
        let e = gen.gen(&chart, 4);
        let printed = chart.print(&e);
        let reparsed = match chart.parse(&printed) {
            Ok(r) => r,
            Err(err) => panic!("failed to reparse `{printed}`: {err}"),
        };
        let mut usable = 0usize;
        for p in &points {
            let (Ok(v1), Ok(v2)) = (chart.eval(&e, p), chart.eval(&reparsed, p)) else {
                continue;
            };
            usable += 1;
            let err = (v1 - v2).norm() / (1.0 + v1.norm());
            assert!(
                err < 1e-12,
                "round trip drift {err:.3e} for `{printed}`"
            );
        }
        if usable > 0 {
            accepted += 1;
        }
    }
}

#[test]
fn parse_reports_position_and_name() {
    let chart = test_chart();
    match chart.parse("2 +* u") {
        Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
    match chart.parse("u + zz") {
        Err(ExprError::Undeclared { pos, name }) => {
            assert_eq!(pos, 4);
            assert_eq!(name, "zz");
        }
        other => panic!("expected undeclared error, got {other:?}"),
    }
    match chart.parse("u + v)") {
        Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 5),
        other => panic!("expected trailing-input error, got {other:?}"),
    }
}

#[test]
fn reserved_constants_and_powers() {
    let chart = test_chart();
    let e = chart.parse("i*i").unwrap();
    assert_eq!(e.as_num(), Some(-1.0));

    let p = &chart.sample_points(1, 3).unwrap()[0];
    let v = chart.eval(&chart.parse("exp(i*pi)").unwrap(), p).unwrap();
    assert!((v.re + 1.0).abs() < 1e-15 && v.im.abs() < 1e-15);

    // Exponents are numeric literals, right after a single `^`.
    let sq = chart.parse("(u + v)^2").unwrap();
    let lin = chart.parse("u + v").unwrap();
    let a = chart.eval(&sq, p).unwrap();
    let b = chart.eval(&lin, p).unwrap();
    assert!((a - b * b).norm() < 1e-14 * (1.0 + a.norm()));

    let inv = chart.parse("u^(-1/2)").unwrap();
    let u = chart.eval(&chart.sym("u").unwrap(), p).unwrap();
    if u.re > 0.0 {
        let got = chart.eval(&inv, p).unwrap();
        assert!((got - u.powf(-0.5)).norm() < 1e-14);
    }
    assert!(chart.parse("u^v").is_err());

    let mut b2 = Chart::builder();
    assert!(matches!(b2.coord("i"), Err(ExprError::BadSymbol(_))));
    assert!(matches!(b2.coord("sin"), Err(ExprError::BadSymbol(_))));
    assert!(matches!(b2.coord("2nd"), Err(ExprError::BadSymbol(_))));
}

#[test]
fn evaluation_guards_poles_and_zero_division() {
    let chart = test_chart();
    let p = &chart.sample_points(1, 5).unwrap()[0];
    assert!(matches!(
        chart.eval(&chart.parse("1/(u - u)").unwrap(), p),
        Err(ExprError::DivisionNearZero)
    ));
    assert!(matches!(
        chart.eval(&chart.parse("tan(pi/2)").unwrap(), p),
        Err(ExprError::Domain(_))
    ));
    assert!(matches!(
        chart.eval(&chart.parse("ln(u - u)").unwrap(), p),
        Err(ExprError::Domain(_))
    ));
    assert!(matches!(
        chart.eval(&chart.parse("(u - u)^(-1/2)").unwrap(), p),
        Err(ExprError::Domain(_))
    ));
}

#[test]
fn sampling_respects_guards_and_seed() {
    let mut b = Chart::builder();
    b.coord("u").unwrap();
    b.coord("v").unwrap();
    b.coord_range("x", -2.0, 2.0).unwrap();
    b.coord("y").unwrap();
    b.guard("x - 1/2").unwrap();
    let chart = b.build().unwrap();

    let pts = chart.sample_points(16, 7).unwrap();
    assert_eq!(pts.len(), 16);
    for p in &pts {
        assert!(p.coords[2] > 0.5);
        assert_eq!(p.seed, 7);
    }
    let again = chart.sample_points(16, 7).unwrap();
    for (p, q) in pts.iter().zip(&again) {
        assert_eq!(p.coords, q.coords);
    }
    let other = chart.sample_points(16, 8).unwrap();
    assert!(pts.iter().zip(&other).any(|(p, q)| p.coords != q.coords));
}

#[test]
fn sampling_rejection_names_the_guard() {
    let mut b = Chart::builder();
    b.coord("u").unwrap();
    b.coord("v").unwrap();
    b.coord("x").unwrap();
    b.coord("y").unwrap();
    b.guard("0 - 2 - x^2").unwrap();
    let chart = b.build().unwrap();
    match chart.sample_points(4, 1) {
        Err(ExprError::AllSamplesRejected { guard, .. }) => {
            assert!(guard.contains("x^2"));
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn zero_field_verdicts() {
    let chart = test_chart();
    let pts = chart.sample_points(8, 2).unwrap();
    let id = chart.parse("sin(u)^2 + cos(u)^2 - 1").unwrap();
    let verdict = chart.is_zero_field(&id, &pts, 1e-9).unwrap();
    assert!(verdict.is_zero, "trig identity flagged nonzero: {verdict:?}");

    let nz = chart.parse("u*v").unwrap();
    let verdict = chart.is_zero_field(&nz, &pts, 1e-9).unwrap();
    assert!(!verdict.is_zero);
    assert!(verdict.witness.is_some());
    assert!(verdict.above > 0);

    let few = &pts[..3];
    assert!(matches!(
        chart.is_zero_field(&nz, few, 1e-9),
        Err(ExprError::TooFewSamples { .. })
    ));
}

#[test]
fn definitions_expand_in_derivatives_and_print() {
    let mut b = Chart::builder();
    b.coord("u").unwrap();
    b.coord("v").unwrap();
    b.coord("x").unwrap();
    b.coord("y").unwrap();
    b.def("r2", "u^2 + v^2").unwrap();
    b.def("w", "sqrt(4 + r2)").unwrap();
    let chart = b.build().unwrap();

    let e = chart.parse("w*sin(u) + r2").unwrap();
    let printed = chart.print(&e);
    assert!(printed.contains('w') && printed.contains("r2"));
    let reparsed = chart.parse(&printed).unwrap();

    let pts = chart.sample_points(4, 9).unwrap();
    for p in &pts {
        let v1 = chart.eval(&e, p).unwrap();
        let v2 = chart.eval(&reparsed, p).unwrap();
        assert!((v1 - v2).norm() < 1e-12 * (1.0 + v1.norm()));

        // d/du picks up both the open sin(u) and the chain through r2, w.
        let d = chart.diff(&e, 0);
        let sym = chart.eval(&d, p).unwrap();
        let h = 1e-6 * (1.0 + p.coords[0].abs());
        let fp = chart.eval(&e, &shifted(p, 0, h)).unwrap();
        let fm = chart.eval(&e, &shifted(p, 0, -h)).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - sym).norm() < 1e-6 * (1.0 + sym.norm()));
    }
}

#[test]
fn conjugation_folds_and_evaluates() {
    let chart = test_chart();
    let p = &chart.sample_points(1, 13).unwrap()[0];
    let z = chart.parse("u + i*v").unwrap();
    let zb = Expr::conj(z.clone());
    let v = chart.eval(&z, p).unwrap();
    let vb = chart.eval(&zb, p).unwrap();
    assert_eq!(v.conj(), vb);
    assert_eq!(chart.print(&Expr::conj(zb)), chart.print(&z));
}

#[test]
fn builder_validation() {
    let mut b = Chart::builder();
    b.coord("u").unwrap();
    b.coord("v").unwrap();
    b.coord("x").unwrap();
    assert!(matches!(b.build(), Err(ExprError::BadDimension(3))));

    let mut b = Chart::builder();
    b.coord("u").unwrap();
    assert!(matches!(b.coord("u"), Err(ExprError::BadSymbol(_))));
    assert!(matches!(
        b.coord_range("q", 1.0, 0.0),
        Err(ExprError::BadRange { .. })
    ));
    assert!(matches!(
        b.coord_range("w", f64::NAN, 1.0),
        Err(ExprError::BadRange { .. })
    ));
}
