//! CSV exports of solver and optimizer traces.

use std::io::Write;

use ccg_core::equilibrium::EquilibriumTrace;
use ccg_core::stackelberg::OptimizationTrace;

/// Columns `t,fw_gap,potential,wall_clock_ms`; `fw_gap` is empty when it
/// was not recorded.
pub fn write_equilibrium_csv<W: Write>(trace: &EquilibriumTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "fw_gap", "potential", "wall_clock_ms"])?;
    for r in &trace.records {
        w.write_record([
            r.t.to_string(),
            r.fw_gap.map(|g| g.to_string()).unwrap_or_default(),
            r.potential.to_string(),
            r.wall_clock_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `k,wall_clock_ms,F,theta_1..theta_n`.
pub fn write_optimization_csv<W: Write>(trace: &OptimizationTrace, n: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "wall_clock_ms".to_string(), "F".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string(), r.wall_clock_ms.to_string(), r.social_cost.to_string()];
        row.extend(r.theta.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccg_core::equilibrium::IterationRecord;
    use ccg_core::stackelberg::OuterRecord;

    #[test]
    fn equilibrium_columns() {
        let trace = EquilibriumTrace {
            records: vec![
                IterationRecord { t: 1, fw_gap: None, potential: 4.75, wall_clock_ms: 0.0 },
                IterationRecord { t: 2, fw_gap: Some(0.5), potential: 4.5, wall_clock_ms: 1.5 },
            ],
            iterates: Vec::new(),
        };
        let mut buf = Vec::new();
        write_equilibrium_csv(&trace, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,fw_gap,potential,wall_clock_ms\n1,,4.75,0\n2,0.5,4.5,1.5\n"
        );
    }

    #[test]
    fn optimization_columns() {
        let trace = OptimizationTrace {
            records: vec![OuterRecord { k: 0, theta: vec![1.0, 1.0], social_cost: 7.0, wall_clock_ms: 0.0 }],
        };
        let mut buf = Vec::new();
        write_optimization_csv(&trace, 2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,wall_clock_ms,F,theta_1,theta_2\n0,0,7,1,1\n");
    }
}
