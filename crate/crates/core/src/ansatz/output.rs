use serde_json::{json, Map, Value};

use super::AnsatzTrajectory;

pub const TRAJECTORY_SCHEMA: u32 = 1;

fn columns(traj: &AnsatzTrajectory) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend(traj.model.kind.labels().iter().map(|s| s.to_string()));
    cols.extend(["volume".to_string(), "fiber_diameter".to_string()]);
    if has_residual(traj) {
        cols.push("einstein_residual".into());
    }
    cols
}

fn has_residual(traj: &AnsatzTrajectory) -> bool {
    super::require_normalized_ec(&traj.model).is_ok()
}

fn rows(traj: &AnsatzTrajectory) -> Vec<Vec<f64>> {
    let residual = has_residual(traj);
    traj.samples
        .iter()
        .map(|s| {
            let mut row = vec![s.t];
            row.extend(&s.scales);
            row.extend([s.volume, s.fiber_diameter]);
            if residual {
                row.push((s.scales[1] - 2.0).abs());
            }
            row
        })
        .collect()
}

/// CSV with columns `t`, the scale factors, `volume`, `fiber_diameter` and,
/// for normalized product-ec runs, `einstein_residual`.
pub fn trajectory_csv(traj: &AnsatzTrajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns(traj)).expect("in-memory write");
    for row in rows(traj) {
        w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn trajectory_json(traj: &AnsatzTrajectory) -> String {
    let cols = columns(traj);
    let records: Vec<Value> = rows(traj)
        .into_iter()
        .map(|row| {
            let map: Map<String, Value> = cols.iter().cloned().zip(row.into_iter().map(Value::from)).collect();
            Value::Object(map)
        })
        .collect();
    let doc = json!({
        "schema": TRAJECTORY_SCHEMA,
        "model": traj.model,
        "dt": traj.dt,
        "records": records,
    });
    serde_json::to_string_pretty(&doc).expect("trajectory serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{integrate, AnsatzModel};
    use crate::cohomology::qi;
    use crate::maflow::FlowMode;

    #[test]
    fn csv_columns_follow_kind() {
        let m = AnsatzModel::product_ec(qi(1), qi(3), FlowMode::Normalized).unwrap();
        let traj = integrate(&m, 0.01, 1e-3).unwrap();
        let csv = trajectory_csv(&traj);
        assert_eq!(csv.lines().next().unwrap(), "t,a,b,volume,fiber_diameter,einstein_residual");
        assert_eq!(csv.lines().count(), 12);
        let m = AnsatzModel::round_p1(qi(1), FlowMode::Unnormalized).unwrap();
        let traj = integrate(&m, 0.01, 1e-3).unwrap();
        assert!(trajectory_csv(&traj).starts_with("t,lambda,volume,fiber_diameter\n"));
        let v: Value = serde_json::from_str(&trajectory_json(&traj)).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["model"]["scales"][0], "1");
        assert!(v["records"][0]["lambda"].is_number());
    }
}
