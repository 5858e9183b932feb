use std::io::Read;

use serde::Serialize;

use crate::acpf::PowerFlowState;
use crate::error::{Error, Result};
use crate::linear_models::LinearModel;
use crate::network::{Injections, Network};
use crate::scheduling::fmt_num;

fn parse_num(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("bad number {field:?} in {what}")))
}

/// Reads per-bus injections from CSV `bus,p,q` (p.u., generation positive).
/// Buses not listed inject nothing.
pub fn read_injections<R: Read>(reader: R, net: &Network) -> Result<Injections> {
    let mut rd = csv::Reader::from_reader(reader);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != ["bus", "p", "q"] {
        return Err(Error::Invalid(format!("injection header must be bus,p,q, got {header:?}")));
    }
    let mut inj = Injections::zeros(net.num_buses());
    for rec in rd.records() {
        let rec = rec?;
        let bus: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad bus id {:?}", &rec[0])))?;
        if bus >= net.num_buses() {
            return Err(Error::Invalid(format!("bus {bus} not in network")));
        }
        inj.p[bus] = parse_num(&rec[1], "injections")?;
        inj.q[bus] = parse_num(&rec[2], "injections")?;
    }
    Ok(inj)
}

/// Power-flow result as CSV `element,index,v,theta,p,q,ell`: one row per bus,
/// one per branch (from-side flows) and a closing `total_losses` row.
pub fn power_flow_csv(net: &Network, st: &PowerFlowState, losses: f64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["element", "index", "v", "theta", "p", "q", "ell"])?;
    for i in 0..net.num_buses() {
        w.write_record([
            "bus".to_string(),
            i.to_string(),
            fmt_num(st.v[i]),
            fmt_num(st.theta[i]),
            fmt_num(st.p[i]),
            fmt_num(st.q[i]),
            String::new(),
        ])?;
    }
    for k in 0..net.num_branches() {
        w.write_record([
            "branch".to_string(),
            k.to_string(),
            String::new(),
            String::new(),
            fmt_num(st.branch_p[k]),
            fmt_num(st.branch_q[k]),
            fmt_num(st.ell[k]),
        ])?;
    }
    w.write_record(["total_losses", "", "", "", &fmt_num(losses), "", ""])?;
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Bus injections from the `bus` rows of a [`power_flow_csv`] table.
pub fn injections_from_power_flow_csv<R: Read>(reader: R, net: &Network) -> Result<Injections> {
    let mut rd = csv::Reader::from_reader(reader);
    let mut inj = Injections::zeros(net.num_buses());
    let mut seen = 0;
    for rec in rd.records() {
        let rec = rec?;
        if &rec[0] != "bus" {
            continue;
        }
        let i: usize = rec[1]
            .parse()
            .map_err(|_| Error::Invalid(format!("bad bus index {:?}", &rec[1])))?;
        if i >= net.num_buses() {
            return Err(Error::Invalid(format!("bus {i} not in network")));
        }
        inj.p[i] = parse_num(&rec[4], "power-flow table")?;
        inj.q[i] = parse_num(&rec[5], "power-flow table")?;
        seen += 1;
    }
    if seen != net.num_buses() {
        return Err(Error::Dimension(format!(
            "power-flow table lists {seen} buses, network has {}",
            net.num_buses()
        )));
    }
    Ok(inj)
}

#[derive(Serialize)]
struct ModelDump<'a> {
    kind: Option<&'static str>,
    base: Option<&'a str>,
    /// Row-major dense blocks; infinite bounds are written as null.
    a: Vec<&'a [f64]>,
    b: Vec<&'a [f64]>,
    c: &'a [f64],
    x_lower: &'a [f64],
    x_upper: &'a [f64],
    y_lower: &'a [f64],
    y_upper: &'a [f64],
    var_index: &'a std::collections::BTreeMap<String, usize>,
}

/// JSON dump of `A x + B y = c` with bounds and the column map.
pub fn model_json(model: &LinearModel) -> Result<String> {
    let dump = ModelDump {
        kind: model.kind.map(|k| k.name()),
        base: model.base_id.as_deref(),
        a: (0..model.a.rows()).map(|i| model.a.row(i)).collect(),
        b: (0..model.b.rows()).map(|i| model.b.row(i)).collect(),
        c: &model.c,
        x_lower: &model.x_lower,
        x_upper: &model.x_upper,
        y_lower: &model.y_lower,
        y_upper: &model.y_upper,
        var_index: &model.var_index,
    };
    Ok(serde_json::to_string(&dump)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acpf::{solve_ac, total_losses};

    #[test]
    fn power_flow_table_round_trips_injections() {
        let net = Network::ieee33();
        let st = solve_ac(&net, &net.injections(1.0, 0.0)).unwrap();
        let csv = power_flow_csv(&net, &st, total_losses(&st, &net)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 33 + 32 + 1);
        let inj = injections_from_power_flow_csv(csv.as_bytes(), &net).unwrap();
        for i in 1..33 {
            assert!((inj.p[i] - st.p[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn injection_csv_checks_header() {
        let net = Network::ieee33();
        assert!(read_injections("bus,p\n1,0.1\n".as_bytes(), &net).is_err());
        let inj = read_injections("bus,p,q\n3,-0.1,-0.02\n".as_bytes(), &net).unwrap();
        assert_eq!((inj.p[3], inj.q[3], inj.p[4]), (-0.1, -0.02, 0.0));
    }
}
