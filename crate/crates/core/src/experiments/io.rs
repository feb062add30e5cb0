use std::io::Write;

use serde::Serialize;

use super::pullback::PullbackResult;
use super::rrho::RRhoEstimate;
use super::segment::{SegmentFractions, SegmentGraph};
use crate::basins::Fate;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct SegmentRow {
    x: f64,
    z: f64,
    slope: f64,
    fate: Option<Fate>,
}

/// `x,z,slope,fate`, with an empty fate column when none was computed.
pub fn write_segment_csv<W: Write>(graph: &SegmentGraph, fractions: Option<&SegmentFractions>, out: W) -> Result<()> {
    if let Some(f) = fractions {
        if f.fates.len() != graph.nodes.len() {
            return Err(Error::InvalidInput("fate list does not match the graph".into()));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    for (i, node) in graph.nodes.iter().enumerate() {
        w.serialize(SegmentRow { x: node.x, z: node.z, slope: node.slope, fate: fractions.map(|f| f.fates[i]) })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RRhoRow {
    x: f64,
    lambda: f64,
    tau: f64,
    tau_diverged: bool,
    certified_length: f64,
    empirical_length: f64,
    member: bool,
}

pub fn write_rrho_csv<W: Write>(est: &RRhoEstimate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &est.points {
        w.serialize(RRhoRow {
            x: p.x,
            lambda: p.lambda,
            tau: p.length.tau,
            tau_diverged: p.length.tau_diverged,
            certified_length: p.length.certified,
            empirical_length: p.length.empirical,
            member: p.member,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DescendantRow {
    index: u128,
    x: f64,
    length: f64,
    certified: f64,
}

pub fn write_pullback_csv<W: Write>(result: &PullbackResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in &result.descendants {
        w.serialize(DescendantRow { index: d.position.index, x: d.x, length: d.length, certified: d.certified })?;
    }
    w.flush()?;
    Ok(())
}
