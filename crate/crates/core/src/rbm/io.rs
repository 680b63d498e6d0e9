//! Model directories: CSV matrices plus a `key=value` manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::constants::AlphaVariant;
use crate::dense::DenseOperator;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

use super::affine::{AffineKind, AffineProblem, AffineSpec, ParametricCoefficients, ThetaFn};
use super::model::{ReducedModel, ResidualFactor};

fn write_matrix(path: &Path, m: &DenseOperator) -> Result<()> {
    m.write_csv(BufWriter::new(fs::File::create(path)?))
}

fn read_matrix(path: &Path) -> Result<DenseOperator> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(DenseOperator::zeros(0, 0));
    }
    DenseOperator::read_csv(&text)
}

/// Vectors as the columns of a matrix.
fn columns_to_matrix(cols: &[Vec<f64>], rows: usize) -> DenseOperator {
    DenseOperator::from_fn(rows, cols.len(), |i, j| cols[j].get(i).copied().unwrap_or(0.0))
}

fn matrix_columns(m: &DenseOperator) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m.get(i, j)).collect()).collect()
}

fn parse_theta(label: &str) -> Result<ThetaFn> {
    if let Some(k) = label.strip_prefix("mu_") {
        let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad parameter label '{label}'")))?;
        if k == 0 {
            return Err(Error::Parse(format!("bad parameter label '{label}'")));
        }
        return Ok(ThetaFn::Param(k - 1));
    }
    label.parse().map(ThetaFn::Constant).map_err(|_| Error::Parse(format!("bad theta '{label}'")))
}

fn join_thetas(t: &[ThetaFn]) -> String {
    t.iter().map(|t| t.label()).collect::<Vec<_>>().join(";")
}

/// Writes `manifest.txt`, `basis.csv` (one column per basis vector),
/// `reduced_a_<q>.csv`, `reduced_f.csv`, the residual blocks
/// `residual_ff.csv`, `residual_fa.csv`, `residual_aa.csv`, the triangular
/// factor `residual_factor.csv` and `selected.csv`.
pub fn save_model(model: &ReducedModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let n = model.size();
    let q_f = model.load_thetas.len();
    let boxes: Vec<String> = model.parameter_box.iter().map(|(lo, hi)| format!("{lo:?}:{hi:?}")).collect();
    let manifest = [
        ("name", model.name.clone()),
        ("s", format!("{:?}", model.s())),
        ("N", model.mesh.n_elements().to_string()),
        ("n", n.to_string()),
        ("variant", model.variant.name().to_string()),
        ("box", boxes.join(";")),
        ("operator_thetas", join_thetas(&model.operator_thetas)),
        ("load_thetas", join_thetas(&model.load_thetas)),
    ];
    let text: String = manifest.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(dir.join("manifest.txt"), text)?;

    write_matrix(&dir.join("basis.csv"), &columns_to_matrix(&model.basis, model.mesh.n_dofs()))?;
    for (q, a) in model.reduced_operators.iter().enumerate() {
        write_matrix(&dir.join(format!("reduced_a_{q}.csv")), a)?;
    }
    let loads = DenseOperator::from_fn(q_f, n, |q, i| model.reduced_loads[q][i]);
    write_matrix(&dir.join("reduced_f.csv"), &loads)?;

    let blocks = model.residual.gram_blocks();
    let k = blocks.rows();
    let ff = DenseOperator::from_fn(q_f, q_f, |a, b| blocks.get(a, b));
    let fa = DenseOperator::from_fn(q_f, k - q_f, |a, b| blocks.get(a, q_f + b));
    let aa = DenseOperator::from_fn(k - q_f, k - q_f, |a, b| blocks.get(q_f + a, q_f + b));
    write_matrix(&dir.join("residual_ff.csv"), &ff)?;
    write_matrix(&dir.join("residual_fa.csv"), &fa)?;
    write_matrix(&dir.join("residual_aa.csv"), &aa)?;
    write_matrix(&dir.join("residual_factor.csv"), &columns_to_matrix(&model.residual.columns, model.residual.rank()))?;
    write_matrix(&dir.join("selected.csv"), &DenseOperator::from_fn(n, model.parameter_box.len(), |i, j| model.selected[i][j]))?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(dir.join("manifest.txt"))?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("manifest line '{line}'")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn field<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key).map(String::as_str).ok_or_else(|| Error::Parse(format!("manifest lacks '{key}'")))
}

fn number<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T> {
    field(m, key)?.parse().map_err(|_| Error::Parse(format!("manifest field '{key}' is malformed")))
}

/// Reads a directory written by [`save_model`]. The coefficient shapes that
/// `α(μ)` needs are rebuilt from the named preset, so only preset problems
/// round-trip.
pub fn load_model(dir: &Path) -> Result<ReducedModel> {
    let m = read_manifest(dir)?;
    let name = field(&m, "name")?.to_string();
    let s: f64 = number(&m, "s")?;
    let n_elements: usize = number(&m, "N")?;
    let n: usize = number(&m, "n")?;
    let variant = AlphaVariant::parse(field(&m, "variant")?)?;
    let parameter_box = field(&m, "box")?
        .split(';')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (lo, hi) = p.split_once(':').ok_or_else(|| Error::Parse(format!("box entry '{p}'")))?;
            let parse = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("box entry '{p}'")));
            Ok((parse(lo)?, parse(hi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let thetas = |key: &str| -> Result<Vec<ThetaFn>> {
        field(&m, key)?.split(';').filter(|t| !t.is_empty()).map(parse_theta).collect()
    };
    let operator_thetas = thetas("operator_thetas")?;
    let load_thetas = thetas("load_thetas")?;

    let kind = match AffineKind::parse(&name)? {
        AffineKind::ConstantDiffusion { .. } => AffineKind::ConstantDiffusion {
            mu_plus: parameter_box.first().map_or(1.0, |b| b.1),
        },
        other => other,
    };
    let spec = AffineSpec::preset(kind)?;
    let coefficients = ParametricCoefficients { s, diffusion: spec.diffusion, reaction: spec.reaction };

    let mesh = Mesh::new(n_elements)?;
    let basis_m = read_matrix(&dir.join("basis.csv"))?;
    let basis = if n == 0 { Vec::new() } else { matrix_columns(&basis_m) };
    let reduced_operators = (0..operator_thetas.len())
        .map(|q| read_matrix(&dir.join(format!("reduced_a_{q}.csv"))))
        .collect::<Result<Vec<_>>>()?;
    let loads = read_matrix(&dir.join("reduced_f.csv"))?;
    let reduced_loads = if n == 0 {
        vec![Vec::new(); load_thetas.len()]
    } else {
        (0..loads.rows()).map(|q| loads.row(q).to_vec()).collect()
    };
    let factor = read_matrix(&dir.join("residual_factor.csv"))?;
    let columns = matrix_columns(&factor);
    let selected_m = read_matrix(&dir.join("selected.csv"))?;
    let selected = (0..selected_m.rows()).map(|i| selected_m.row(i).to_vec()).collect();

    let expected_columns = load_thetas.len() + n * operator_thetas.len();
    if basis.len() != n
        || basis.iter().any(|b| b.len() != mesh.n_dofs())
        || reduced_operators.iter().any(|a| a.rows() != n || a.cols() != n)
        || reduced_loads.iter().any(|f| f.len() != n)
        || columns.len() != expected_columns
    {
        return Err(Error::Parse(format!("model files in {} have inconsistent sizes", dir.display())));
    }
    Ok(ReducedModel::from_parts(
        name,
        mesh,
        variant,
        parameter_box,
        coefficients,
        operator_thetas,
        load_thetas,
        basis,
        reduced_operators,
        reduced_loads,
        ResidualFactor::from_columns(columns),
        selected,
    ))
}

/// Convenience check that a loaded model belongs to `problem`.
pub fn model_matches(model: &ReducedModel, problem: &AffineProblem) -> bool {
    model.name == problem.name
        && model.mesh == problem.mesh
        && model.s() == problem.order.s()
        && model.operator_thetas.len() == problem.n_operator_terms()
}

#[cfg(test)]
mod tests {
    use super::super::affine::{build_affine_problem, gauss_legendre_grid};
    use super::super::greedy::{greedy_train, GreedyMode, GreedyOptions};
    use super::*;

    #[test]
    fn round_trip_reproduces_online_results() {
        let p = build_affine_problem(AffineKind::GreedyCase1, 1.5, 32, AlphaVariant::Alpha).unwrap();
        let train = gauss_legendre_grid(&p.parameter_box, 2).unwrap();
        let (model, _) = greedy_train(&p, &train, GreedyOptions::new(GreedyMode::Weak, 1e-10, 5)).unwrap();
        let dir = std::env::temp_dir().join(format!("fracrb-model-{}", std::process::id()));
        save_model(&model, &dir).unwrap();
        let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
        assert!(manifest.contains("s=1.5\n") && manifest.contains("N=32\n") && manifest.contains("n=5\n"));
        let loaded = load_model(&dir).unwrap();
        assert!(model_matches(&loaded, &p));
        let mu = [0.8, 1.2, 1.1, 0.4, 0.9];
        let a = model.estimate(&mu).unwrap();
        let b = loaded.estimate(&mu).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
        assert!((a.delta - b.delta).abs() <= 1e-12 * a.delta);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn theta_labels() {
        assert_eq!(parse_theta("mu_3").unwrap(), ThetaFn::Param(2));
        assert_eq!(parse_theta("1").unwrap(), ThetaFn::Constant(1.0));
        assert!(parse_theta("mu_0").is_err());
        assert!(parse_theta("x").is_err());
    }
}
