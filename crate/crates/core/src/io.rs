//! CSV writers for the artifact files. Floats use the shortest decimal that
//! parses back to the same value; rows follow the input ordering.

use std::io::{self, Write};

use crate::extended::SpectrumRow;
use crate::topology::PhaseDiagram;
use crate::wavepacket::{DensityProfile, Trajectory};

pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(col: &Option<Vec<f64>>, j: usize) -> String {
    col.as_ref().map(|c| fmt_float(c[j])).unwrap_or_default()
}

pub fn write_spectrum_csv<W: Write>(mut w: W, rows: &[SpectrumRow]) -> io::Result<()> {
    writeln!(w, "k,band_index,quasienergy,replica_q")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", fmt_float(r.k), r.band_index, fmt_float(r.quasienergy), r.replica_q)?;
    }
    Ok(())
}

/// Analytic columns are left empty when the trajectory carries none.
pub fn write_trajectory_csv<W: Write>(mut w: W, t: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,x_exact,v_exact,norm,x_first_order,x_lowfreq")?;
    for j in 0..t.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_float(t.times[j]),
            fmt_float(t.x_exact[j]),
            fmt_float(t.v_exact[j]),
            fmt_float(t.norm[j]),
            fmt_opt(&t.x_first_order, j),
            fmt_opt(&t.x_lowfreq, j)
        )?;
    }
    Ok(())
}

/// One row per (time, cell), every `stride`-th time slice.
pub fn write_density_csv<W: Write>(mut w: W, d: &DensityProfile, stride: usize) -> io::Result<()> {
    writeln!(w, "t,cell,rho")?;
    for (j, row) in d.rho.iter().enumerate().step_by(stride.max(1)) {
        let t = fmt_float(d.times[j]);
        for (i, r) in row.iter().enumerate() {
            writeln!(w, "{t},{i},{}", fmt_float(*r))?;
        }
    }
    Ok(())
}

pub fn write_phase_diagram_csv<W: Write>(mut w: W, d: &PhaseDiagram) -> io::Result<()> {
    writeln!(w, "A,omega,nu0,nupi,gap0,gappi,status")?;
    for p in &d.points {
        let (nu0, nupi, g0, gpi) = match &p.report {
            Some(r) => (r.nu0.to_string(), r.nupi.to_string(), fmt_float(r.gap0), fmt_float(r.gappi)),
            None => Default::default(),
        };
        writeln!(w, "{},{},{nu0},{nupi},{g0},{gpi},{}", fmt_float(p.amp), fmt_float(p.omega), p.status)?;
    }
    Ok(())
}
