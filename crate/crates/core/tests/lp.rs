use jetspace::lp::{rational_to_f64, LinearProgram, LpStatus, Relation};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Lp {
    vars: usize,
    free: Vec<bool>,
    objective: Vec<i32>,
    rows: Vec<(Vec<i32>, u8, i32)>,
}

fn lp_case() -> impl Strategy<Value = Lp> {
    (1usize..=5, 0usize..=7).prop_flat_map(|(vars, nrows)| {
        (
            prop::collection::vec(any::<bool>(), vars),
            prop::collection::vec(-4i32..=4, vars),
            prop::collection::vec((prop::collection::vec(-4i32..=4, vars), 0u8..3, -8i32..=8), nrows),
        )
            .prop_map(move |(free, objective, rows)| Lp {
                vars,
                free,
                objective,
                rows,
            })
    })
}

impl Lp {
    fn build(&self, scale: f64) -> LinearProgram {
        let mut lp = LinearProgram::new(self.vars);
        for j in 0..self.vars {
            lp.set_free(j, self.free[j]);
            lp.set_objective(j, self.objective[j] as f64);
        }
        for (a, rel, b) in &self.rows {
            let rel = [Relation::Le, Relation::Ge, Relation::Eq][*rel as usize];
            let coeffs = a.iter().enumerate().map(|(j, &v)| (j, v as f64 * scale)).collect();
            lp.add_row(coeffs, rel, *b as f64 * scale);
        }
        lp
    }
}

fn exact_objective(c: &[i32], x: &[BigRational]) -> BigRational {
    c.iter()
        .zip(x)
        .fold(BigRational::zero(), |acc, (&ci, xi)| acc + BigRational::from_i32(ci).unwrap() * xi)
}

#[test]
fn small_textbook_problem() {
    // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6  →  (8/5, 6/5), value 14/5
    let mut lp = LinearProgram::new(2);
    lp.set_objective(0, -1.0);
    lp.set_objective(1, -1.0);
    lp.add_row(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0);
    lp.add_row(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0);
    let s = lp.solve().unwrap();
    assert!(s.is_optimal());
    assert!((s.objective + 2.8).abs() < 1e-12);
    let e = lp.solve_exact().unwrap();
    assert_eq!(e.status, LpStatus::Optimal);
    assert_eq!(e.x[0], BigRational::new(8.into(), 5.into()));
    assert_eq!(rational_to_f64(&e.x[1]), 1.2);
}

#[test]
fn infeasible_and_unbounded() {
    let mut lp = LinearProgram::new(1);
    lp.add_row(vec![(0, 1.0)], Relation::Le, -1.0);
    assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
    assert_eq!(lp.solve_exact().unwrap().status, LpStatus::Infeasible);
    let mut lp = LinearProgram::new(1);
    lp.set_free(0, true);
    lp.set_objective(0, 1.0);
    assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    assert_eq!(lp.solve_exact().unwrap().status, LpStatus::Unbounded);
}

#[test]
fn non_finite_data_is_an_error() {
    let mut lp = LinearProgram::new(1);
    lp.add_row(vec![(0, f64::NAN)], Relation::Le, 1.0);
    assert!(lp.solve_exact().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn float_and_exact_solvers_agree(c in lp_case(), scale in prop_oneof![Just(1.0), Just(1e-3), Just(1e3)]) {
        let lp = c.build(scale);
        let f = lp.solve().unwrap();
        let e = lp.solve_exact().unwrap();
        prop_assert_eq!(f.status, e.status);
        if e.status == LpStatus::Optimal {
            let want = rational_to_f64(&exact_objective(&c.objective, &e.x));
            prop_assert!((f.objective - want).abs() <= 1e-7 * want.abs().max(1.0), "{} vs {}", f.objective, want);
            prop_assert!(f.max_violation <= 1e-8 * scale.max(1.0));
            let xe: Vec<f64> = e.x.iter().map(rational_to_f64).collect();
            prop_assert!(lp.max_violation(&xe) <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn adding_rows_never_lowers_the_optimum(c in lp_case(), extra in prop::collection::vec(-4i32..=4, 5), rhs in -8i32..=8) {
        let lp = c.build(1.0);
        let mut tighter = lp.clone();
        tighter.add_row(extra.iter().take(c.vars).enumerate().map(|(j, &v)| (j, v as f64)).collect(), Relation::Le, rhs as f64);
        let (a, b) = (lp.solve().unwrap(), tighter.solve().unwrap());
        if a.status == LpStatus::Infeasible {
            prop_assert_eq!(b.status, LpStatus::Infeasible);
        }
        if a.is_optimal() && b.is_optimal() {
            prop_assert!(b.objective >= a.objective - 1e-9 * a.objective.abs().max(1.0));
        }
    }
}
