//! Per-net feature matrix assembly and the feature-dump CSV format.

use crate::hypergraph::{Hypergraph, NetId};
use crate::structural::{compute_structural, StructuralMap};
use crate::testability::{
    compute_probabilities, compute_scoap, NetProbability, ProbabilityMap, ScanVariant,
    ScoapMap, DEFAULT_SCOAP_CEILING,
};
use std::collections::BTreeMap;
use std::io;
use thiserror::Error;

pub const N_FEATURES: usize = 19;

/// Column order of the feature dump (after the leading `net` column).
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "p1", "p_trans", "cc0_fs", "cc1_fs", "co_fs", "cc0_ns", "cc1_ns", "co_ns", "sc0_ns",
    "sc1_ns", "so_ns", "fanin_l1", "fanout_l1", "fanin_l2", "fanout_l2", "dist_ff_d",
    "dist_ff_q", "dist_pi", "dist_po",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|f| *f == name)
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad feature file: {0}")]
    Format(String),
}

/// The full per-net feature matrix of one design, in hypergraph net order.
#[derive(Debug, Clone)]
pub struct DesignFeatures {
    pub net_names: Vec<String>,
    pub matrix: Vec<[f64; N_FEATURES]>,
    /// Unreachable-distance sentinel used in the distance columns.
    pub sentinel: u32,
    pub prob_converged: bool,
    pub scoap_converged: bool,
}

impl DesignFeatures {
    pub fn len(&self) -> usize {
        self.net_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net_names.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64; N_FEATURES] {
        &self.matrix[i]
    }

    pub fn value(&self, i: usize, feature: &str) -> f64 {
        self.matrix[i][feature_index(feature).expect("known feature")]
    }

    pub fn index_of(&self, net: &str) -> Option<usize> {
        self.net_names.iter().position(|n| n == net)
    }

    /// No-scan controllability norms and p1 for the functional-scoping
    /// stage: (net_cc, net_sc, p1).
    pub fn fsa_profile(&self, i: usize) -> (f64, f64, f64) {
        let r = &self.matrix[i];
        let cc = r[feature_index("cc0_ns").unwrap()].hypot(r[feature_index("cc1_ns").unwrap()]);
        let sc = r[feature_index("sc0_ns").unwrap()].hypot(r[feature_index("sc1_ns").unwrap()]);
        (cc, sc, r[0])
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> Result<(), FeatureError> {
        writeln!(
            w,
            "# sentinel={} prob_converged={} scoap_converged={}",
            self.sentinel, self.prob_converged, self.scoap_converged
        )?;
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["net".to_string()];
        header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
        wtr.write_record(&header)?;
        for (name, row) in self.net_names.iter().zip(&self.matrix) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| format_value(*v)));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<DesignFeatures, FeatureError> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut sentinel = 0u32;
        let mut prob_converged = true;
        let mut scoap_converged = true;
        let mut body = text.as_str();
        if let Some(rest) = text.strip_prefix('#') {
            let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
            for kv in line.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    match k {
                        "sentinel" => {
                            sentinel = v
                                .parse()
                                .map_err(|_| FeatureError::Format("bad sentinel".into()))?
                        }
                        "prob_converged" => prob_converged = v == "true",
                        "scoap_converged" => scoap_converged = v == "true",
                        _ => {}
                    }
                }
            }
            body = tail;
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.len() != N_FEATURES + 1 || &headers[0] != "net" {
            return Err(FeatureError::Format("unexpected columns".into()));
        }
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            if &headers[i + 1] != *name {
                return Err(FeatureError::Format(format!(
                    "column {} is `{}`, expected `{}`",
                    i + 1,
                    &headers[i + 1],
                    name
                )));
            }
        }
        let mut net_names = Vec::new();
        let mut matrix = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            net_names.push(rec[0].to_string());
            let mut row = [0f64; N_FEATURES];
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = rec[i + 1]
                    .parse()
                    .map_err(|_| FeatureError::Format(format!("bad value `{}`", &rec[i + 1])))?;
            }
            matrix.push(row);
        }
        Ok(DesignFeatures {
            net_names,
            matrix,
            sentinel,
            prob_converged,
            scoap_converged,
        })
    }
}

/// Shortest lossless decimal form (f64 round-trips through the string).
fn format_value(v: f64) -> String {
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}

/// Intermediate per-net analysis results, kept so callers can reuse the
/// probability map for trigger selection.
pub struct FeatureExtraction {
    pub features: DesignFeatures,
    pub probabilities: ProbabilityMap,
    pub scoap_full: ScoapMap,
    pub scoap_noscan: ScoapMap,
    pub structural: StructuralMap,
}

pub fn extract_features(h: &Hypergraph, pi_bias: &BTreeMap<String, f64>) -> FeatureExtraction {
    let probabilities = compute_probabilities(h, pi_bias);
    let scoap_full = compute_scoap(h, ScanVariant::FullScan, DEFAULT_SCOAP_CEILING);
    let scoap_noscan = compute_scoap(h, ScanVariant::NoScan, DEFAULT_SCOAP_CEILING);
    let structural = compute_structural(h);

    let mut net_names = Vec::with_capacity(h.net_count());
    let mut matrix = Vec::with_capacity(h.net_count());
    for net in h.net_ids() {
        net_names.push(h.net_name(net).to_string());
        matrix.push(assemble_row(
            net,
            &probabilities,
            &scoap_full,
            &scoap_noscan,
            &structural,
        ));
    }
    let features = DesignFeatures {
        net_names,
        matrix,
        sentinel: structural.sentinel,
        prob_converged: probabilities.converged,
        scoap_converged: scoap_full.converged && scoap_noscan.converged,
    };
    FeatureExtraction {
        features,
        probabilities,
        scoap_full,
        scoap_noscan,
        structural,
    }
}

fn assemble_row(
    net: NetId,
    probs: &ProbabilityMap,
    fs: &ScoapMap,
    ns: &ScoapMap,
    st: &StructuralMap,
) -> [f64; N_FEATURES] {
    let p: NetProbability = probs.get(net);
    let f = fs.get(net);
    let n = ns.get(net);
    let s = st.get(net);
    [
        p.p1,
        p.p_trans(),
        f.cc0 as f64,
        f.cc1 as f64,
        f.co as f64,
        n.cc0 as f64,
        n.cc1 as f64,
        n.co as f64,
        n.sc0 as f64,
        n.sc1 as f64,
        n.so as f64,
        s.fanin_l1 as f64,
        s.fanout_l1 as f64,
        s.fanin_l2 as f64,
        s.fanout_l2 as f64,
        s.dist_ff_d as f64,
        s.dist_ff_q as f64,
        s.dist_pi as f64,
        s.dist_po as f64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Designations;
    use crate::library::CellLibrary;
    use crate::netlist::parse_netlist;

    fn extract(src: &str) -> FeatureExtraction {
        let lib = CellLibrary::default_library();
        let n = parse_netlist(src, &lib).unwrap();
        let h = Hypergraph::build(&n, &lib, &Designations::default()).unwrap();
        extract_features(&h, &BTreeMap::new())
    }

    #[test]
    fn csv_round_trip() {
        let fx = extract(crate::fixtures::C17);
        let mut buf = Vec::new();
        fx.features.write_csv(&mut buf).unwrap();
        let back = DesignFeatures::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.net_names, fx.features.net_names);
        assert_eq!(back.sentinel, fx.features.sentinel);
        for (a, b) in back.matrix.iter().zip(&fx.features.matrix) {
            assert_eq!(a, b, "values survive the text round trip bit-exactly");
        }
    }

    #[test]
    fn header_columns_match_spec_order() {
        let fx = extract(crate::fixtures::C17);
        let mut buf = Vec::new();
        fx.features.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().nth(1).unwrap();
        assert_eq!(
            header,
            "net,p1,p_trans,cc0_fs,cc1_fs,co_fs,cc0_ns,cc1_ns,co_ns,sc0_ns,sc1_ns,so_ns,\
             fanin_l1,fanout_l1,fanin_l2,fanout_l2,dist_ff_d,dist_ff_q,dist_pi,dist_po"
        );
    }

    #[test]
    fn deterministic_extraction() {
        let a = extract(crate::fixtures::C17);
        let b = extract(crate::fixtures::C17);
        for (ra, rb) in a.features.matrix.iter().zip(&b.features.matrix) {
            for (x, y) in ra.iter().zip(rb) {
                assert!(x.to_bits() == y.to_bits(), "bit-identical across runs");
            }
        }
    }
}
