use fracrb::coefficient::Coefficient;
use fracrb::fractional::FracOrder;
use fracrb::mesh::build_mesh;
use fracrb::problem::{Example, FemProblem};
use fracrb::solutions::build_strong_solution;

fn nodal_error(problem: &FemProblem, strong: &fracrb::solutions::StrongSolution, n: usize) -> f64 {
    let mesh = build_mesh(n).unwrap();
    let u = problem.solve(&mesh).unwrap();
    (1..n).map(|i| (u.nodal_value(i) - strong.eval(mesh.node(i))).abs()).fold(0.0, f64::max)
}

#[test]
fn piecewise_diffusion_converges_to_strong_solution() {
    for s in [1.8, 1.5] {
        let d = Example::Ex4.diffusion();
        let f = Coefficient::Constant(1.0);
        let strong = build_strong_solution(&d, &f, s).unwrap();
        let problem = FemProblem { order: FracOrder::new(s).unwrap(), diffusion: d, reaction: Coefficient::Constant(0.0), load: f };
        let errors: Vec<f64> = [16, 64, 256].iter().map(|&n| nodal_error(&problem, &strong, n)).collect();
        // the solution behaves like x^{s-1} at the origin, which caps the
        // nodal rate near s - 1
        let rates: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).ln() / 4f64.ln()).collect();
        assert!(rates.iter().all(|&r| (r - (s - 1.0)).abs() < 0.15), "s={s}: {errors:?} {rates:?}");
    }
}

#[test]
fn smooth_diffusion_with_exact_load() {
    let s = 1.6;
    let d = Example::Ex3.diffusion();
    let f = Example::Ex2.load();
    let strong = build_strong_solution(&d, &f, s).unwrap();
    let problem = FemProblem { order: FracOrder::new(s).unwrap(), diffusion: d, reaction: Coefficient::Constant(0.0), load: f };
    let coarse = nodal_error(&problem, &strong, 32);
    let fine = nodal_error(&problem, &strong, 128);
    assert!(fine < 0.5 * coarse, "{coarse} {fine}");
}
