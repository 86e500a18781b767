//! Plain-text dictionary format.
//!
//! ```text
//! # comment lines start with '#'
//! <k> <sll_db> <phase_rad> [<psl_db>]
//! <re> <im>          (M lines, one per element)
//! ...
//! ```
//!
//! Numbers are written with 17 significant digits so weights round-trip
//! bit-exactly.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::{BeamDictionary, DictionaryEntry};
use crate::error::{Error, Result};
use crate::linalg::CVec;

pub fn write_dictionary<W: Write>(dict: &BeamDictionary, mut out: W) -> Result<()> {
    writeln!(out, "# cbm-dictionary")?;
    writeln!(
        out,
        "# entries={} elements={}",
        dict.len(),
        dict.num_elements()
    )?;
    for (k, e) in dict.entries().iter().enumerate() {
        writeln!(
            out,
            "{k} {:.16e} {:.16e} {:.16e}",
            20.0 * e.sll.log10(),
            e.phase,
            20.0 * e.achieved_psl.log10()
        )?;
        for z in e.weights.iter() {
            writeln!(out, "{:.16e} {:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a number, found {tok:?}"),
    })
}

pub fn read_dictionary<R: BufRead>(input: R) -> Result<BeamDictionary> {
    struct Pending {
        sll: f64,
        phase: f64,
        psl: f64,
        weights: Vec<Complex64>,
    }
    let mut entries: Vec<Pending> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        match toks.len() {
            2 => {
                let Some(cur) = entries.last_mut() else {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "weight row before any entry header".into(),
                    });
                };
                cur.weights.push(Complex64::new(
                    parse_f64(toks[0], line_no)?,
                    parse_f64(toks[1], line_no)?,
                ));
            }
            3 | 4 => {
                let k: usize = toks[0].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("expected entry index, found {:?}", toks[0]),
                })?;
                if k != entries.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("entry index {k} out of order (expected {})", entries.len()),
                    });
                }
                let psl = match toks.get(3) {
                    Some(t) => 10f64.powf(parse_f64(t, line_no)? / 20.0),
                    None => f64::NAN,
                };
                entries.push(Pending {
                    sll: 10f64.powf(parse_f64(toks[1], line_no)? / 20.0),
                    phase: parse_f64(toks[2], line_no)?,
                    psl,
                    weights: Vec::new(),
                });
            }
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 2, 3 or 4 fields, found {n}"),
                })
            }
        }
    }
    BeamDictionary::new(
        entries
            .into_iter()
            .map(|p| DictionaryEntry {
                sll: p.sll,
                phase: p.phase,
                weights: CVec::from_vec(p.weights),
                achieved_psl: p.psl,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BeamDictionary {
        let entries = (0..3)
            .map(|k| DictionaryEntry {
                sll: 0.01 * (k + 1) as f64,
                phase: std::f64::consts::PI * k as f64 / 3.0,
                weights: CVec::from_fn(4, |i, _| {
                    Complex64::new((i as f64 + 0.1).sin() / 3.0, (k as f64 * 1.7 + i as f64).cos())
                }),
                achieved_psl: 0.5 + 0.01 * k as f64,
            })
            .collect();
        BeamDictionary::new(entries).unwrap()
    }

    #[test]
    fn weights_round_trip_exactly() {
        let dict = sample();
        let mut buf = Vec::new();
        write_dictionary(&dict, &mut buf).unwrap();
        let back = read_dictionary(buf.as_slice()).unwrap();
        assert_eq!(back.len(), dict.len());
        for (a, b) in back.entries().iter().zip(dict.entries()) {
            assert_eq!(a.weights, b.weights);
            assert!((a.sll - b.sll).abs() < 1e-14);
            assert!((a.achieved_psl - b.achieved_psl).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            read_dictionary("1.0 2.0\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(read_dictionary("0 -25 0\n1 x\n".as_bytes()).is_err());
        assert!(read_dictionary("1 -25 0\n1 0\n".as_bytes()).is_err());
        assert!(read_dictionary("0 -25 0\n1 0\n0 0\n1 -30 0\n1 0\n".as_bytes()).is_err());
    }
}
