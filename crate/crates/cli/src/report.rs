//! `report`: summaries of stored artifacts, optionally re-verified from the stored fields.

use std::path::{Path, PathBuf};

use vortexlab_core::functional::{vortex_residuals, ymh_energy};
use vortexlab_core::io::decode_solution;
use vortexlab_core::{Artifact, Error};

use crate::error::{CliError, CliResult};

fn artifacts(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::from(Error::ArtifactMissing(format!("{}: {e}", dir.display()))))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "vxlb"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::ArtifactMissing(format!("no .vxlb artifacts in {}", dir.display())).into());
    }
    Ok(files)
}

fn meta_f64(meta: &serde_json::Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(meta, |v, k| v.get(*k)).and_then(|v| v.as_f64())
}

/// Prints one block per artifact and returns the number of failed verifications.
/// Every artifact is fully decoded, so checksum failures surface without `verify`.
pub fn report(dir: &Path, verify: bool) -> CliResult<usize> {
    let mut failures = 0;
    for path in artifacts(dir)? {
        let bytes = std::fs::read(&path).map_err(|e| CliError::from(Error::ArtifactMissing(format!("{}: {e}", path.display()))))?;
        let art: Artifact = decode_solution(&bytes)?;
        let header = &art.header;
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        let g = &header.geometry;
        println!("{name}: {:?} triple on T^{} periods {:?} grid {:?} scale {}", header.kind, 2 * g.dim, g.periods, g.grid, g.kahler_scale);
        println!("  bundles: {} (rank {}, degree {}), {} (rank {}, degree {})", header.bundle1.label, header.bundle1.rank, header.bundle1.degree, header.bundle2.label, header.bundle2.rank, header.bundle2.degree);
        println!("  tau {}  tau' {}", header.params.tau, header.params.tau_prime);
        let m = &header.meta;
        if let Some(e) = meta_f64(m, &["certificate", "energy", "total"]) {
            println!(
                "  energy {e}  topological minimum {}  defect {:e}  relative gap {:e}",
                meta_f64(m, &["certificate", "energy", "topological_minimum"]).unwrap_or(f64::NAN),
                meta_f64(m, &["certificate", "energy", "defect"]).unwrap_or(f64::NAN),
                meta_f64(m, &["certificate", "relative_gap"]).unwrap_or(f64::NAN),
            );
        }
        if let Some(r) = m.get("residuals") {
            println!("  residuals {r}");
        }
        if let Some(p) = m.get("passed") {
            println!("  certificate passed: {p}");
        }
        if verify {
            let res = vortex_residuals(&art.geometry, &art.state, &header.params)?;
            let energy = ymh_energy(&art.geometry, &art.state, &header.params)?;
            let tol = meta_f64(m, &["tolerance"]).unwrap_or(1e-8);
            let stored = meta_f64(m, &["certificate", "energy", "total"]);
            let energy_ok = stored.is_none_or(|s| (s - energy.total).abs() <= 1e-10 * s.abs().max(1.0));
            let ok = res.max() <= tol && energy_ok;
            println!("  verify: residual {:e} (tolerance {tol:e}), energy {} -> {}", res.max(), energy.total, if ok { "ok" } else { "FAILED" });
            if !ok {
                failures += 1;
            }
        }
    }
    Ok(failures)
}
