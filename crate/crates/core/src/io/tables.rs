//! CSV summaries. Every file starts with a header row; probabilities, ARI
//! values and information criteria are unitless, log densities are natural logs.

use std::io::{Read, Write};

use super::panel::csv_err;
use crate::analysis::{pareto_k_histogram, CoclusterStack, LooResult, PartitionSeries, WaicResult};
use crate::error::{Error, Result};

/// Co-clustering probabilities at one time: `station_id` then one column per station.
pub fn write_cocluster_csv<W: Write>(stack: &CoclusterStack, t: usize, station_ids: &[String], w: W) -> Result<()> {
    if station_ids.len() != stack.n || t >= stack.times {
        return Err(Error::input("co-clustering stack does not match the labels"));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["station_id".to_string()];
    header.extend(station_ids.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for (i, sid) in station_ids.iter().enumerate() {
        let mut rec = vec![sid.clone()];
        rec.extend((0..stack.n).map(|j| stack.get(t, i, j).to_string()));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Long format `time,station_id,cluster` with canonical labels.
pub fn write_partition_csv<W: Write>(
    series: &PartitionSeries,
    station_ids: &[String],
    time_labels: &[String],
    w: W,
) -> Result<()> {
    if station_ids.len() != series.n() || time_labels.len() != series.times() {
        return Err(Error::input("partition series does not match the labels"));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "station_id", "cluster"]).map_err(csv_err)?;
    for (t, tl) in time_labels.iter().enumerate() {
        for (i, sid) in station_ids.iter().enumerate() {
            out.write_record([tl.as_str(), sid.as_str(), &series.at(t)[i].to_string()]).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `write_partition_csv` output back; stations and times in first-seen order.
pub fn read_partition_csv<R: Read>(r: R) -> Result<(PartitionSeries, Vec<String>, Vec<String>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut stations: Vec<String> = Vec::new();
    let mut times: Vec<String> = Vec::new();
    let mut entries = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::Ingestion { row, message: e.to_string() })?;
        if rec.len() != 3 {
            return Err(Error::Ingestion { row, message: "expected time,station_id,cluster".into() });
        }
        let t = index_of(&mut times, &rec[0]);
        let i = index_of(&mut stations, &rec[1]);
        let c: usize = rec[2]
            .parse()
            .map_err(|_| Error::Ingestion { row, message: format!("bad cluster label `{}`", &rec[2]) })?;
        entries.push((row, t, i, c));
    }
    let mut parts = vec![vec![usize::MAX; stations.len()]; times.len()];
    for (row, t, i, c) in entries {
        if parts[t][i] != usize::MAX {
            return Err(Error::Ingestion { row, message: "duplicate (time, station) entry".into() });
        }
        parts[t][i] = c;
    }
    if parts.iter().flatten().any(|&c| c == usize::MAX) {
        return Err(Error::Ingestion { row: 1, message: "partition table is not complete".into() });
    }
    Ok((PartitionSeries::new(parts), stations, times))
}

fn index_of(v: &mut Vec<String>, s: &str) -> usize {
    match v.iter().position(|x| x == s) {
        Some(p) => p,
        None => {
            v.push(s.to_string());
            v.len() - 1
        }
    }
}

/// `lag,time,ari` where `time` labels the later of the two partitions.
pub fn write_lagged_ari_csv<W: Write>(table: &[Vec<f64>], time_labels: &[String], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lag", "time", "ari"]).map_err(csv_err)?;
    for (l, row) in table.iter().enumerate() {
        let lag = l + 1;
        for (t, v) in row.iter().enumerate() {
            let label =
                time_labels.get(t + lag).ok_or_else(|| Error::input("lagged ARI table longer than the time axis"))?;
            out.write_record([lag.to_string(), label.clone(), v.to_string()]).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `metric,value` rows for WAIC and PSIS-LOO, then the Pareto-k bins.
pub fn write_criteria_csv<W: Write>(waic: &WaicResult, loo: &LooResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "value"]).map_err(csv_err)?;
    let hist = pareto_k_histogram(&loo.pareto_k);
    let rows: Vec<(&str, String)> = vec![
        ("waic", waic.waic.to_string()),
        ("lppd", waic.lppd.to_string()),
        ("p_waic", waic.p_waic.to_string()),
        ("looic", loo.looic.to_string()),
        ("elpd_loo", loo.elpd.to_string()),
        ("max_pareto_k", loo.max_k().to_string()),
        ("plain_is_cells", loo.plain_is.len().to_string()),
        ("pareto_k_le_0.5", hist[0].to_string()),
        ("pareto_k_0.5_0.7", hist[1].to_string()),
        ("pareto_k_0.7_1", hist[2].to_string()),
        ("pareto_k_gt_1", hist[3].to_string()),
    ];
    for (k, v) in rows {
        out.write_record([k, v.as_str()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize, prefix: &str) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn partition_round_trip() {
        let s = PartitionSeries::new(vec![vec![0, 0, 1], vec![2, 1, 1]]);
        let mut buf = Vec::new();
        write_partition_csv(&s, &ids(3, "S"), &ids(2, "t"), &mut buf).unwrap();
        let (back, st, tl) = read_partition_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert_eq!(st, ids(3, "S"));
        assert_eq!(tl, ids(2, "t"));
    }

    #[test]
    fn cocluster_csv_shape() {
        let s = PartitionSeries::new(vec![vec![0, 0, 1]]);
        let stack = CoclusterStack::from_partitions(&s);
        let mut buf = Vec::new();
        write_cocluster_csv(&stack, 0, &ids(3, "S"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "station_id,S0,S1,S2");
        assert_eq!(lines[1], "S0,1,1,0");
    }

    #[test]
    fn lagged_table_labels_later_time() {
        let table = vec![vec![1.0, 0.5], vec![0.25]];
        let mut buf = Vec::new();
        write_lagged_ari_csv(&table, &ids(3, "t"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "lag,time,ari\n1,t1,1\n1,t2,0.5\n2,t2,0.25\n");
    }
}
