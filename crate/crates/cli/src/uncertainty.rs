//! `uncertainty`: the commutator check and σ_x σ_v for a list of densities.

use std::path::{Path, PathBuf};

use bubbletree::tree::TreeParams;
use bubbletree::uncertainty::{commutator_check, saturation_check, DensityGrid, Family, PRODUCT_TOL};

use crate::config::{key, Key, Settings};
use crate::output::{num, opt, Outputs, Table};
use crate::CliError;

pub const KEYS: &[Key] = &[
    key("seed", "1", "base seed of the commutator walks"),
    key(
        "densities",
        "gaussian:0:0.5;laplace:0:0.5;logistic:0:0.5;mixture:0.5:-1:0.5:0.5:1:0.5",
        "`;`-separated family specs",
    ),
    key("density_csv", "", "comma-separated x,p files on uniform grids"),
    key("points", "", "grid points for the named families; empty uses each family's default"),
    key("commutator_paths", "100", "walks in the commutator check"),
    key("commutator_steps", "1000", "steps per walk"),
    key("commutator_tau", "0.01", "time step of the walks"),
    key("commutator_mu", "0", "walk drift"),
];

pub fn run(s: &Settings, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let families: Vec<(String, Family)> = s
        .raw("densities")
        .split(';')
        .map(str::trim)
        .filter(|d| !d.is_empty())
        .map(|d| d.parse::<Family>().map(|f| (d.to_owned(), f)))
        .collect::<Result<_, _>>()?;
    let points = s.opt_usize("points")?;
    let mut grids: Vec<(String, Option<Family>, DensityGrid)> = Vec::new();
    for (label, fam) in families {
        let g = fam.grid(points)?;
        grids.push((label, Some(fam), g));
    }
    for path in s.list("density_csv") {
        let g = DensityGrid::from_csv(Path::new(&path))?;
        grids.push((path, None, g));
    }

    let mut report = Table::new(&[
        "density", "points", "sigma_x", "sigma_v", "v_star", "product", "analytic_product", "alpha",
        "saturation_residual", "saturated",
    ]);
    for (label, fam, g) in &grids {
        let sat = saturation_check(g)?;
        report.push(vec![
            label.clone(),
            g.len().to_string(),
            num(sat.sigma_x),
            num(sat.sigma_v),
            num(sat.v_star),
            num(sat.product),
            opt(fam.as_ref().and_then(Family::analytic_product)),
            num(sat.alpha),
            num(sat.residual),
            sat.is_gaussian(PRODUCT_TOL).to_string(),
        ]);
    }

    let walk = TreeParams::new(
        1.0,
        s.f64("commutator_mu")?,
        s.f64("commutator_tau")?,
        s.usize("commutator_steps")?,
        1.0,
    )?;
    let c = commutator_check(&walk, s.usize("commutator_paths")?, s.parsed("seed")?)?;
    let mut comm = Table::new(&["paths", "steps", "min", "max", "mean", "max_deviation"]);
    comm.push(vec![
        c.n_paths.to_string(),
        c.n_steps.to_string(),
        num(c.min),
        num(c.max),
        num(c.mean),
        num(c.max_deviation),
    ]);

    let mut out = Outputs::new(out_dir);
    out.add("uncertainty_report.csv", report.csv());
    out.add("commutator.csv", comm.csv());
    let text = format!(
        "Uncertainty product\n{}\nCommutator W(n+1) v - v W(n)\n{}",
        report.text(),
        comm.text()
    );
    out.add("uncertainty_report.txt", text);
    out.add("manifest.txt", s.manifest(&[]));
    out.write()
}
