use fieldexpr::{C64, Chart, Expr, PointSample};
use robinson::{extract, CoframeField};

fn point(coords: Vec<f64>) -> PointSample {
    PointSample {
        coords,
        params: vec![],
        seed: 0,
        index: 0,
    }
}

fn assert_close(got: C64, want: C64, tol: f64, what: &str) {
    let err = (got - want).norm() / (1.0 + want.norm());
    assert!(
        err < tol,
        "{what}: got {got}, want {want} (rel err {err:.3e})"
    );
}

/// Flat space in a null coframe: every torsion component vanishes.
#[test]
fn minkowski_is_torsion_free() {
    for m in 1..=3usize {
        let n = 2 * m + 2;
        let mut b = Chart::builder();
        b.coord("u").unwrap();
        b.coord("v").unwrap();
        for a in 1..=m {
            b.coord(&format!("x{a}")).unwrap();
            b.coord(&format!("y{a}")).unwrap();
        }
        let chart = b.build().unwrap();

        let mut kappa = vec![Expr::zero(); n];
        kappa[0] = Expr::one();
        let mut lambda = vec![Expr::zero(); n];
        lambda[1] = Expr::one();
        let mut theta = Vec::new();
        for a in 0..m {
            let mut row = vec![Expr::zero(); n];
            row[2 + 2 * a] = Expr::one();
            row[3 + 2 * a] = Expr::i();
            theta.push(row);
        }
        let cf = CoframeField::unitary(chart, m, kappa, theta, lambda).unwrap();
        let pts = cf.chart().sample_points(4, 1).unwrap();
        for p in &pts {
            let pd = cf.at(p).unwrap();
            let comps = extract(&pd);
            assert!(comps.scale() < 1e-12, "m = {m}: torsion scale {}", comps.scale());
        }
    }
}

/// A rotating black hole family in even dimension six, in the null coframe
/// aligned with its principal congruence. The torsion components have short
/// closed forms; extraction must reproduce them digit for digit.
#[test]
fn kerr_nut_ads_six_matches_closed_forms() {
    let mut b = Chart::builder();
    b.coord_range("r", 1.2, 1.6).unwrap();
    b.coord_range("x1", 0.8, 1.2).unwrap();
    b.coord_range("x2", 2.3, 2.7).unwrap();
    b.coord("t").unwrap();
    b.coord("p1").unwrap();
    b.coord("p2").unwrap();
    b.def("X", "36 + 13*r^2 + r^4 + r^6/10 + r/3").unwrap();
    b.def("X1", "36 - 13*x1^2 + x1^4 - x1^6/10 + x1/7").unwrap();
    b.def("X2", "36 - 13*x2^2 + x2^4 - x2^6/10 + x2/11").unwrap();
    b.def("U", "(r^2 + x1^2)*(r^2 + x2^2)").unwrap();
    b.def("U1", "(r^2 + x1^2)*(x2^2 - x1^2)").unwrap();
    b.def("U2", "(r^2 + x2^2)*(x1^2 - x2^2)").unwrap();
    b.def("A1", "x1^2 + x2^2").unwrap();
    b.def("A2", "x1^2*x2^2").unwrap();
    b.def("C11", "x2^2 - r^2").unwrap();
    b.def("C12", "-x2^2*r^2").unwrap();
    b.def("C21", "x1^2 - r^2").unwrap();
    b.def("C22", "-x1^2*r^2").unwrap();
    b.def("sr", "sqrt(U/(2*X))").unwrap();
    b.def("s1", "sqrt(U1/(2*X1))").unwrap();
    b.def("s2", "sqrt(U2/(2*X2))").unwrap();
    b.guard("X").unwrap();
    b.guard("X1*U1").unwrap();
    b.guard("X2*U2").unwrap();
    let chart = b.build().unwrap();

    let parse = |s: &str| chart.parse(s).unwrap();
    let kappa = vec![
        parse("sr"),
        Expr::zero(),
        Expr::zero(),
        parse("sr*X/U"),
        parse("sr*(X/U)*A1"),
        parse("sr*(X/U)*A2"),
    ];
    let lambda = vec![
        parse("sr"),
        Expr::zero(),
        Expr::zero(),
        parse("-sr*X/U"),
        parse("-sr*(X/U)*A1"),
        parse("-sr*(X/U)*A2"),
    ];
    let theta = vec![
        vec![
            Expr::zero(),
            parse("s1"),
            Expr::zero(),
            parse("i*s1*X1/U1"),
            parse("i*s1*(X1/U1)*C11"),
            parse("i*s1*(X1/U1)*C12"),
        ],
        vec![
            Expr::zero(),
            Expr::zero(),
            parse("s2"),
            parse("i*s2*X2/U2"),
            parse("i*s2*(X2/U2)*C21"),
            parse("i*s2*(X2/U2)*C22"),
        ],
    ];
    let cf = CoframeField::unitary(chart, 2, kappa, theta, lambda).unwrap();

    let p = point(vec![1.4, 1.0, 2.5, 1.0 / 3.0, 1.0 / 7.0, 1.0 / 7.0]);
    let pd = cf.at(&p).unwrap();
    let comps = extract(&pd);

    let (r, x) = (1.4f64, [1.0f64, 2.5]);
    let xv = 36.0 + 13.0 * r * r + r.powi(4) + r.powi(6) / 10.0 + r / 3.0;
    let xa = [
        36.0 - 13.0 * x[0] * x[0] + x[0].powi(4) - x[0].powi(6) / 10.0 + x[0] / 7.0,
        36.0 - 13.0 * x[1] * x[1] + x[1].powi(4) - x[1].powi(6) / 10.0 + x[1] / 11.0,
    ];
    let u = (r * r + x[0] * x[0]) * (r * r + x[1] * x[1]);
    let ua = [
        (r * r + x[0] * x[0]) * (x[1] * x[1] - x[0] * x[0]),
        (r * r + x[1] * x[1]) * (x[0] * x[0] - x[1] * x[1]),
    ];

    let tol = 1e-10;
    for a in 0..2 {
        let want = (xv / (2.0 * u)).sqrt() * C64::new(r, -x[a]) / (r * r + x[a] * x[a]);
        assert_close(comps.t_blk[a][a], want, tol, &format!("T[{a}][{a}]"));
        assert_close(
            comps.t_blk[a][1 - a],
            C64::new(0.0, 0.0),
            tol,
            "T off-diagonal",
        );

        let want_e = C64::new(0.0, 1.0) * (xa[a] / (2.0 * ua[a])).sqrt() * C64::new(r, x[a])
            / (r * r + x[a] * x[a]);
        assert_close(comps.e_vec[a], want_e, tol, &format!("E[{a}]"));
    }
    for a in 0..2 {
        let b2 = 1 - a;
        let want_gb = -C64::new(0.0, 1.0) * (2.0 * xa[b2] / ua[b2]).sqrt() / (x[a] + x[b2]);
        assert_close(comps.gb_full[a][a][b2], want_gb, tol, &format!("Gb[{a}][{a}][{b2}]"));
    }

    let want_eps = (2.0 * xv / u).sqrt()
        * (r / (r * r + x[0] * x[0]) + r / (r * r + x[1] * x[1]));
    assert_close(comps.eps, C64::new(want_eps, 0.0), tol, "eps");
    let want_tw = -(2.0 * xv / u).sqrt()
        * (x[0] / (r * r + x[0] * x[0]) + x[1] / (r * r + x[1] * x[1]));
    assert_close(comps.tau_w, C64::new(want_tw, 0.0), tol, "tau_w");

    // The congruence is geodesic and the wholly skew pieces vanish.
    for name in ["gamma", "tau", "sigma_s", "zeta", "G_skew", "G_hook", "B"] {
        let worst = comps
            .entries(name)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(
            worst < 1e-10 * (1.0 + comps.scale()),
            "{name} should vanish, max {worst:.3e}"
        );
    }
}

/// Same family one dimension down (m = 1), checking the scalar pieces.
#[test]
fn kerr_nut_ads_four_matches_closed_forms() {
    let mut b = Chart::builder();
    b.coord_range("r", 1.0, 1.4).unwrap();
    b.coord_range("x1", 1.3, 1.7).unwrap();
    b.coord("t").unwrap();
    b.coord("p1").unwrap();
    b.def("X", "4 + r^2 + r^4/20 + r/5").unwrap();
    b.def("X1", "4 - x1^2 + x1^4/20 + x1/9").unwrap();
    b.def("U", "r^2 + x1^2").unwrap();
    b.def("sr", "sqrt(U/(2*X))").unwrap();
    b.def("s1", "sqrt(U/(2*X1))").unwrap();
    b.guard("X").unwrap();
    b.guard("X1").unwrap();
    let chart = b.build().unwrap();

    let parse = |s: &str| chart.parse(s).unwrap();
    let kappa = vec![
        parse("sr"),
        Expr::zero(),
        parse("sr*X/U"),
        parse("sr*(X/U)*x1^2"),
    ];
    let lambda = vec![
        parse("sr"),
        Expr::zero(),
        parse("-sr*X/U"),
        parse("-sr*(X/U)*x1^2"),
    ];
    let theta = vec![vec![
        Expr::zero(),
        parse("s1"),
        parse("i*s1*X1/U"),
        parse("-i*s1*(X1/U)*r^2"),
    ]];
    let cf = CoframeField::unitary(chart, 1, kappa, theta, lambda).unwrap();

    let p = point(vec![1.2, 1.5, 1.0 / 3.0, 1.0 / 7.0]);
    let pd = cf.at(&p).unwrap();
    let comps = extract(&pd);

    let (r, x) = (1.2f64, 1.5f64);
    let xv = 4.0 + r * r + r.powi(4) / 20.0 + r / 5.0;
    let x1 = 4.0 - x * x + x.powi(4) / 20.0 + x / 9.0;
    let u = r * r + x * x;

    let tol = 1e-10;
    let want_t = (xv / (2.0 * u)).sqrt() * C64::new(r, -x) / u;
    assert_close(comps.t_blk[0][0], want_t, tol, "T[0][0]");
    let want_e = C64::new(0.0, 1.0) * (x1 / (2.0 * u)).sqrt() * C64::new(r, x) / u;
    assert_close(comps.e_vec[0], want_e, tol, "E[0]");
    assert_close(
        comps.eps,
        C64::new((2.0 * xv / u).sqrt() * r / u, 0.0),
        tol,
        "eps",
    );
    assert_close(
        comps.tau_w,
        C64::new(-(2.0 * xv / u).sqrt() * x / u, 0.0),
        tol,
        "tau_w",
    );
    for v in &comps.gamma {
        assert!(v.norm() < 1e-10 * (1.0 + comps.scale()));
    }
}
