//! CSV tables and a flat binary field dump.

use std::io::{self, Write};

use super::convergence::ConvergenceReport;
use super::energy::EnergyTrace;
use super::Solution;

pub fn write_energy_csv<W: Write>(mut w: W, trace: &EnergyTrace) -> io::Result<()> {
    writeln!(w, "t,E,flux")?;
    for ((t, e), f) in trace.t.iter().zip(&trace.energy).zip(&trace.flux) {
        writeln!(w, "{t:.17e},{e:.17e},{f:.17e}")?;
    }
    Ok(())
}

pub fn write_errors_csv<W: Write>(mut w: W, report: &ConvergenceReport) -> io::Result<()> {
    writeln!(w, "grid,error,order")?;
    for (k, (g, e)) in report.grids.iter().zip(&report.errors).enumerate() {
        match k.checked_sub(1).and_then(|j| report.orders.get(j)) {
            Some(o) => writeln!(w, "{g},{e:.17e},{o:.17e}")?,
            None => writeln!(w, "{g},{e:.17e},")?,
        }
    }
    Ok(())
}

/// One header line `levels nx rank complex128-le t0 dt dx`, then the values
/// as interleaved little-endian `f64` pairs in level, cell, component order.
pub fn write_field<W: Write>(mut w: W, sol: &Solution) -> io::Result<()> {
    let f = &sol.field;
    let g = &sol.grid;
    writeln!(
        w,
        "{} {} {} complex128-le {:.17e} {:.17e} {:.17e}",
        f.levels, f.nx, f.rank, g.t0, g.dt, g.dx
    )?;
    let mut buf = Vec::with_capacity(f.data().len() * 16);
    for z in f.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)
}
