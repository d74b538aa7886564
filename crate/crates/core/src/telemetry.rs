//! CSV and JSON writers for simulation output.

use std::io::{self, Write};

use crate::sim::{RunSummary, TelemetryRecord};

/// Frozen column order.
pub const CSV_COLUMNS: [&str; 48] = [
    "t",
    "p_x",
    "p_y",
    "p_z",
    "v_x",
    "v_y",
    "v_z",
    "q_w",
    "q_x",
    "q_y",
    "q_z",
    "w_x",
    "w_y",
    "w_z",
    "pd_x",
    "pd_y",
    "pd_z",
    "qd_w",
    "qd_x",
    "qd_y",
    "qd_z",
    "psi",
    "ep_norm",
    "fd_x",
    "fd_y",
    "fd_z",
    "taud_x",
    "taud_y",
    "taud_z",
    "f_x",
    "f_y",
    "f_z",
    "tau_x",
    "tau_y",
    "tau_z",
    "alpha_1",
    "alpha_2",
    "alpha_3",
    "alpha_4",
    "beta_1",
    "beta_2",
    "beta_3",
    "beta_4",
    "omega_1",
    "omega_2",
    "omega_3",
    "omega_4",
    "sat_scale",
];

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

/// Flips `q` into the hemisphere of `prev` so the series has no sign jumps.
pub fn continue_hemisphere(q: [f64; 4], prev: Option<[f64; 4]>) -> [f64; 4] {
    match prev {
        Some(p) if q.iter().zip(p.iter()).map(|(a, b)| a * b).sum::<f64>() < 0.0 => q.map(|x| -x),
        _ => q,
    }
}

/// Writes the header and one row per record. Numbers use 17 significant digits.
pub fn write_csv(records: &[TelemetryRecord], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{}", csv_header())?;
    let (mut q_prev, mut qd_prev) = (None, None);
    let mut row: Vec<f64> = Vec::with_capacity(48);
    for rec in records {
        let q = continue_hemisphere(rec.state.r.to_quaternion_wxyz(), q_prev);
        let qd = continue_hemisphere(rec.reference.r_d.to_quaternion_wxyz(), qd_prev);
        q_prev = Some(q);
        qd_prev = Some(qd);
        row.clear();
        row.push(rec.t);
        row.extend(rec.state.p.iter());
        row.extend(rec.state.v.iter());
        row.extend(q);
        row.extend(rec.state.w.iter());
        row.extend(rec.reference.p_d.iter());
        row.extend(qd);
        row.push(rec.psi);
        row.push(rec.errors.e_p.norm());
        row.extend(rec.commanded.force.iter());
        row.extend(rec.commanded.torque.iter());
        row.extend(rec.achieved.force.iter());
        row.extend(rec.achieved.torque.iter());
        row.extend(rec.actuators.iter().map(|a| a.alpha));
        row.extend(rec.actuators.iter().map(|a| a.beta));
        row.extend(rec.actuators.iter().map(|a| a.omega));
        row.push(rec.sat_scale);
        let mut first = true;
        for x in &row {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{x:.16e}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn summary_json(summary: &RunSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary is plain data") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_header() {
        assert_eq!(
            csv_header(),
            "t,p_x,p_y,p_z,v_x,v_y,v_z,q_w,q_x,q_y,q_z,w_x,w_y,w_z,pd_x,pd_y,pd_z,qd_w,qd_x,qd_y,qd_z,psi,ep_norm,\
fd_x,fd_y,fd_z,taud_x,taud_y,taud_z,f_x,f_y,f_z,tau_x,tau_y,tau_z,alpha_1,alpha_2,alpha_3,alpha_4,\
beta_1,beta_2,beta_3,beta_4,omega_1,omega_2,omega_3,omega_4,sat_scale"
        );
        assert_eq!(csv_header().split(',').count(), 48);
    }

    #[test]
    fn hemisphere_continuity() {
        let q = [0.1, 0.7, -0.7, 0.1];
        assert_eq!(continue_hemisphere(q, None), q);
        assert_eq!(continue_hemisphere(q, Some([-0.1, -0.7, 0.7, 0.0])), [-0.1, -0.7, 0.7, -0.1]);
    }
}
