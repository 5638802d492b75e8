//! Line-delimited JSON scenario and trace files.
//!
//! Scenario layout: a header line, then for every frame a frame record
//! followed by its truth record. Floats are written in shortest round-trip
//! form, so save then load reproduces every value bit for bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{FrameMatch, FrameTruth, Scenario, ScenarioMeta, ScenarioTrace, TruthObject};
use crate::detector::PointCloudFrame;
use crate::geometry::{Vec2, Vec3};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported scenario format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioIoError {
    ScenarioIoError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    version: u32,
    name: String,
    frame_rate_hz: f64,
    vehicle_width_m: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecordLine {
    frame_id: u64,
    t: f64,
    ego: [f64; 2],
    points: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthObjectLine {
    label: String,
    pos: [f64; 3],
    dangerous: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthRecordLine {
    frame_id: u64,
    objects: Vec<TruthObjectLine>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BodyLine {
    Frame(FrameRecordLine),
    Truth(TruthRecordLine),
}

pub fn write_scenario<W: Write>(scenario: &Scenario, mut w: W) -> io::Result<()> {
    let header = HeaderRecord {
        version: FORMAT_VERSION,
        name: scenario.meta.name.clone(),
        frame_rate_hz: scenario.meta.frame_rate_hz,
        vehicle_width_m: scenario.meta.vehicle_width_m,
        seed: scenario.meta.seed,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for frame in &scenario.frames {
        let rec = FrameRecordLine {
            frame_id: frame.frame_id,
            t: frame.timestamp,
            ego: frame.ego_translation.to_array(),
            points: frame.points.iter().map(|p| p.to_array()).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
        if let Some(truth) = scenario.truth_for(frame.frame_id) {
            let rec = TruthRecordLine {
                frame_id: truth.frame_id,
                objects: truth
                    .objects
                    .iter()
                    .map(|o| TruthObjectLine {
                        label: o.label.clone(),
                        pos: o.pos.to_array(),
                        dangerous: o.dangerous,
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioIoError> {
    let file = File::create(path)?;
    write_scenario(scenario, BufWriter::new(file))?;
    Ok(())
}

pub fn read_scenario<R: BufRead>(reader: R) -> Result<Scenario, ScenarioIoError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line_no, first) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let first = first?;
    let version = serde_json::from_str::<serde_json::Value>(&first)
        .map_err(|e| parse_err(line_no, e.to_string()))?
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| parse_err(line_no, "header lacks a numeric version"))?;
    if version != FORMAT_VERSION as u64 {
        return Err(ScenarioIoError::Version {
            found: version.try_into().unwrap_or(u32::MAX),
        });
    }
    let header: HeaderRecord = serde_json::from_str(&first).map_err(|e| parse_err(line_no, e.to_string()))?;
    if !(header.frame_rate_hz > 0.0) {
        return Err(parse_err(line_no, "frame_rate_hz must be positive"));
    }

    let mut frames: Vec<PointCloudFrame> = Vec::new();
    let mut ground_truth: Vec<FrameTruth> = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut truth_seen: HashSet<u64> = HashSet::new();
    for (line_no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let body: BodyLine = serde_json::from_str(&line)
            .map_err(|e| parse_err(line_no, format!("not a frame or truth record: {e}")))?;
        match body {
            BodyLine::Frame(f) => {
                if let Some(prev) = frames.last() {
                    if f.frame_id <= prev.frame_id {
                        return Err(parse_err(line_no, format!("frame_id {} not increasing", f.frame_id)));
                    }
                }
                let expected_t = f.frame_id as f64 / header.frame_rate_hz;
                if (f.t - expected_t).abs() > 1e-9 {
                    return Err(parse_err(
                        line_no,
                        format!("timestamp {} does not match frame_id / frame_rate_hz = {expected_t}", f.t),
                    ));
                }
                seen.insert(f.frame_id);
                frames.push(
                    PointCloudFrame::new(f.frame_id, f.t, f.points.into_iter().map(Vec3::from).collect())
                        .with_ego(Vec2::from(f.ego)),
                );
            }
            BodyLine::Truth(t) => {
                if !seen.contains(&t.frame_id) {
                    return Err(parse_err(line_no, format!("truth for unknown frame {}", t.frame_id)));
                }
                if !truth_seen.insert(t.frame_id) {
                    return Err(parse_err(line_no, format!("duplicate truth for frame {}", t.frame_id)));
                }
                ground_truth.push(FrameTruth {
                    frame_id: t.frame_id,
                    objects: t
                        .objects
                        .into_iter()
                        .map(|o| TruthObject {
                            label: o.label,
                            pos: o.pos.into(),
                            dangerous: o.dangerous,
                        })
                        .collect(),
                });
            }
        }
    }

    Ok(Scenario {
        meta: ScenarioMeta {
            name: header.name,
            frame_rate_hz: header.frame_rate_hz,
            vehicle_width_m: header.vehicle_width_m,
            seed: header.seed,
        },
        frames,
        ground_truth,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioIoError> {
    read_scenario(BufReader::new(File::open(path)?))
}

/// Trace as line-delimited JSON: a header, one record per frame, one per
/// light transition, then a summary.
pub fn write_trace<W: Write>(trace: &ScenarioTrace, matches: &[FrameMatch], mut w: W) -> io::Result<()> {
    let mut line = |v: serde_json::Value| -> io::Result<()> {
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")
    };
    line(json!({
        "kind": "header",
        "version": FORMAT_VERSION,
        "name": trace.name,
        "frame_rate_hz": trace.frame_rate_hz,
        "tau_s": trace.tau_s,
        "duration_s": trace.duration_s,
    }))?;
    for f in &trace.frames {
        let frame_matches: Vec<&FrameMatch> = matches.iter().filter(|m| m.frame_id == f.frame_id).collect();
        line(json!({
            "kind": "frame",
            "frame_id": f.frame_id,
            "t": f.t,
            "tracks": f.tracks,
            "verdicts": f.verdicts,
            "danger": f.danger,
            "accepted": f.accepted,
            "light_on": f.light_on,
            "truth_matches": frame_matches,
        }))?;
    }
    for tr in &trace.transitions {
        line(json!({ "kind": "light", "t": tr.t, "state": tr.state }))?;
    }
    line(json!({
        "kind": "summary",
        "frames": trace.frames.len(),
        "dangerous_verdicts": trace.dangerous_verdict_count(),
        "light_on_s": trace.light_on_s(),
    }))?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate_scenario, Preset};
    use std::io::Cursor;

    fn bytes(s: &Scenario) -> Vec<u8> {
        let mut buf = Vec::new();
        write_scenario(s, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact() {
        let s = generate_scenario(&Preset::Tracking.spec(5)).unwrap();
        let back = read_scenario(Cursor::new(bytes(&s))).unwrap();
        assert_eq!(back, s);
        assert_eq!(bytes(&back), bytes(&s));
    }

    #[test]
    fn header_fields_written_first() {
        let s = generate_scenario(&Preset::Approach.spec(1)).unwrap();
        let text = String::from_utf8(bytes(&s)).unwrap();
        let first = text.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["name"], "approach");
        assert_eq!(v["frame_rate_hz"], 10.0);
        assert_eq!(v["vehicle_width_m"], 2.0);
        assert_eq!(v["seed"], 1);
        let second: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert!(second.get("points").is_some() && second.get("ego").is_some());
        let third: serde_json::Value = serde_json::from_str(text.lines().nth(2).unwrap()).unwrap();
        assert!(third.get("objects").is_some());
    }

    #[test]
    fn truncated_file_reports_line() {
        let s = generate_scenario(&Preset::Approach.spec(1)).unwrap();
        let mut b = bytes(&s);
        b.truncate(b.len() - 40);
        match read_scenario(Cursor::new(b)) {
            Err(ScenarioIoError::Parse { line, .. }) => assert_eq!(line, 101),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let text = "{\"version\":2,\"name\":\"x\",\"frame_rate_hz\":10.0,\"vehicle_width_m\":2.0,\"seed\":0}\n";
        assert!(matches!(read_scenario(Cursor::new(text)), Err(ScenarioIoError::Version { found: 2 })));
    }

    #[test]
    fn empty_frame_list_is_valid() {
        let text = "{\"version\":1,\"name\":\"x\",\"frame_rate_hz\":10.0,\"vehicle_width_m\":2.0,\"seed\":0}\n";
        let s = read_scenario(Cursor::new(text)).unwrap();
        assert!(s.frames.is_empty() && s.ground_truth.is_empty());
        assert!(matches!(read_scenario(Cursor::new("")), Err(ScenarioIoError::Parse { line: 1, .. })));
    }

    #[test]
    fn structural_errors_rejected() {
        let header = "{\"version\":1,\"name\":\"x\",\"frame_rate_hz\":10.0,\"vehicle_width_m\":2.0,\"seed\":0}";
        let orphan = format!("{header}\n{{\"frame_id\":3,\"objects\":[]}}\n");
        assert!(matches!(read_scenario(Cursor::new(orphan)), Err(ScenarioIoError::Parse { line: 2, .. })));
        let bad_t = format!("{header}\n{{\"frame_id\":1,\"t\":0.5,\"ego\":[0.0,0.0],\"points\":[]}}\n");
        assert!(matches!(read_scenario(Cursor::new(bad_t)), Err(ScenarioIoError::Parse { line: 2, .. })));
        let unknown = format!("{header}\n{{\"frame_id\":0,\"t\":0.0,\"ego\":[0.0,0.0],\"points\":[],\"extra\":1}}\n");
        assert!(read_scenario(Cursor::new(unknown)).is_err());
    }
}
