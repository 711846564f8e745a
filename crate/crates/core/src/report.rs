//! Regeneration of the result tables: free-variable counts, the kernel
//! comparison (E_g and zone-plate errors) and optimized coefficient listings.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::kernelspace::{solve_spec, KernelSpec, PiecewiseKernel, SolveOutcome};
use crate::metrics::{zone_plate_experiment, ZonePlateSetup};
use crate::optimizer::{optimize_kernel, DesignMetric, SearchConfig};
use crate::staircase::QuadratureConfig;
use crate::zoo::{reference_kernel_with, table_kernels, KernelName};

/// Coefficients are printed with this many decimals.
pub const COEFF_DECIMALS: usize = 6;
/// E_g values are printed with this many decimals.
pub const EG_DECIMALS: usize = 3;

/// Doubled radii and degrees of the free-variable grid.
pub const GRID_TWICE_RADII: [u32; 5] = [2, 3, 4, 5, 6];
pub const GRID_DEGREES: [u32; 3] = [2, 3, 4];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreeVarCell {
    pub spec: KernelSpec,
    /// `None` for an overconstrained system.
    pub free: Option<usize>,
}

/// Free-variable counts, one row per radius: the non-smooth cells for
/// every degree followed by the smooth ones.
pub fn free_variable_grid() -> Result<Vec<Vec<FreeVarCell>>> {
    GRID_TWICE_RADII
        .iter()
        .map(|&tr| {
            [false, true]
                .iter()
                .flat_map(|&smooth| GRID_DEGREES.iter().map(move |&p| (p, smooth)))
                .map(|(p, smooth)| {
                    let spec = KernelSpec::new(tr, p, smooth)?;
                    let free = match solve_spec(&spec) {
                        SolveOutcome::Solved(s) => Some(s.free_count()),
                        SolveOutcome::Overconstrained => None,
                    };
                    Ok(FreeVarCell { spec, free })
                })
                .collect()
        })
        .collect()
}

fn radius_label(spec: &KernelSpec) -> String {
    crate::polyalg::rational::format_rational(&spec.radius())
}

pub fn free_variable_csv(grid: &[Vec<FreeVarCell>]) -> String {
    let mut out = String::from("# free coefficients after all linear constraints; '-' = overconstrained\n");
    out.push('r');
    for smooth in ["", "_S"] {
        for p in GRID_DEGREES {
            let _ = write!(out, ",p{p}{smooth}");
        }
    }
    out.push('\n');
    for row in grid {
        out.push_str(&radius_label(&row[0].spec));
        for cell in row {
            match cell.free {
                Some(n) => {
                    let _ = write!(out, ",{n}");
                }
                None => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    out
}

/// Settings shared by the comparison table runs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TableConfig {
    pub search: SearchConfig,
    pub quadrature: QuadratureConfig,
    pub zone_plate: ZonePlateSetup,
}

impl TableConfig {
    /// `# key=value` header lines recording every setting.
    pub fn header(&self) -> Result<String> {
        let mut out = String::new();
        for (key, value) in [
            ("search", serde_json::to_string(&self.search)?),
            ("quadrature", serde_json::to_string(&self.quadrature)?),
            ("zone_plate", serde_json::to_string(&self.zone_plate)?),
        ] {
            let _ = writeln!(out, "# {key}={value}");
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelRow {
    pub label: String,
    pub name: String,
    pub eg: f64,
    /// Whether `eg` came from the exact symbolic path.
    pub eg_exact: bool,
    pub rmse: f64,
    pub rmse_interior: f64,
    pub gcs: f64,
}

/// Evaluates one kernel the way the comparison table does.
pub fn kernel_row(name: &KernelName, config: &TableConfig) -> Result<KernelRow> {
    let k = reference_kernel_with(name, &config.search)?;
    let (eg, eg_exact) = k.eg(0.5, &config.quadrature)?;
    let zp = zone_plate_experiment(k.resampler()?, &config.zone_plate)?;
    Ok(KernelRow {
        label: name.label(),
        name: name.to_string(),
        eg,
        eg_exact,
        rmse: zp.rmse,
        rmse_interior: zp.rmse_interior,
        gcs: zp.gcs,
    })
}

/// The comparison table in its canonical kernel order.
pub fn kernel_table(config: &TableConfig) -> Result<Vec<KernelRow>> {
    table_kernels()?.par_iter().map(|n| kernel_row(n, config)).collect()
}

pub fn kernel_rows_csv(rows: &[KernelRow]) -> String {
    let mut out = String::from("kernel,name,E_g,E_g_exact,RMSE,RMSE_interior,GCS\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.*},{},{:.3e},{:.3e},{:.6}",
            r.label, r.name, EG_DECIMALS, r.eg, r.eg_exact, r.rmse, r.rmse_interior, r.gcs
        );
    }
    out
}

/// Kernels whose optimized coefficients are listed.
pub fn listed_specs() -> Result<Vec<KernelSpec>> {
    [(4, 2, false), (4, 4, true), (5, 3, false), (6, 3, false), (6, 3, true), (6, 4, true)]
        .iter()
        .map(|&(tr, p, s)| KernelSpec::new(tr, p, s))
        .collect()
}

/// Coefficient rows `c[i][1..=p]` with fixed decimals and a sign column.
pub fn format_matrix(k: &PiecewiseKernel) -> Result<String> {
    let mut out = String::new();
    for row in k.float_coeffs()? {
        let cells: Vec<String> = row[1..].iter().map(|c| format_coeff(*c)).collect();
        let _ = writeln!(out, "  [{}]", cells.join(", "));
    }
    Ok(out)
}

/// Fixed-decimal coefficient with negative zero normalized.
pub fn format_coeff(c: f64) -> String {
    let s = format!("{:>10.*}", COEFF_DECIMALS, c);
    if s.trim() == "-0.000000" {
        format!("{:>10.*}", COEFF_DECIMALS, 0.0)
    } else {
        s
    }
}

/// Optimized coefficient matrices of the listed kernels.
pub fn coefficient_listing(search: &SearchConfig) -> Result<String> {
    let designs: Vec<_> = listed_specs()?
        .par_iter()
        .map(|s| optimize_kernel(s, DesignMetric::EgHalf, search))
        .collect::<Result<_>>()?;
    let mut out = String::new();
    let _ = writeln!(out, "# search={}", serde_json::to_string(search)?);
    for d in designs {
        let _ = writeln!(out, "{}:", d.kernel.spec().label());
        out.push_str(&format_matrix(&d.kernel)?);
        for w in &d.warnings {
            let _ = writeln!(out, "  # warning: {w}");
        }
    }
    Ok(out)
}
