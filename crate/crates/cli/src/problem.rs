//! Problem files: a TOML document with `[plant]`, `[channels]`, optional
//! `[options]`, and optionally a given `[design]` or `[decomposition]`.
//!
//! Matrices are row-major nested arrays. Unknown and duplicate keys are
//! rejected; every error carries the line it refers to.

use std::ops::Range;

use mimo_ncs::cyclic::{CyclicBlock, CyclicDecomposition};
use mimo_ncs::plantmodel::{ChannelEnsemble, Plant};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub epsilon: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub seed: u64,
    pub output: Option<String>,
}

/// A design to evaluate instead of synthesizing one.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub f: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub plant: Plant,
    pub channels: ChannelEnsemble,
    pub options: Options,
    pub design: Option<DesignSpec>,
    pub decomposition: Option<CyclicDecomposition>,
}

type Matrix = Spanned<Vec<Vec<f64>>>;
type Vector = Spanned<Vec<f64>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    plant: RawPlant,
    channels: Spanned<RawChannels>,
    #[serde(default)]
    options: RawOptions,
    design: Option<RawDesign>,
    decomposition: Option<RawDecomposition>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlant {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    x0: Option<Vector>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannels {
    kind: Spanned<String>,
    powers: Option<Vector>,
    noise: Option<Vector>,
    means: Option<Vector>,
    variances: Option<Vector>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    epsilon: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    #[serde(rename = "F")]
    f: Matrix,
    #[serde(rename = "U")]
    u: Matrix,
    epsilon: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecomposition {
    #[serde(rename = "P")]
    p: Matrix,
    #[serde(rename = "Q")]
    q: Matrix,
    blocks: Vec<RawBlock>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    #[serde(rename = "A")]
    a: Matrix,
    b: Vector,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].matches('\n').count() + 1
    }

    fn column(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        end - self.0[..end].rfind('\n').map_or(0, |i| i + 1) + 1
    }

    fn core(&self, span: Range<usize>, error: mimo_ncs::Error) -> CliError {
        CliError::Core {
            line: Some(self.line(span)),
            error,
        }
    }

    fn matrix(&self, m: &Matrix, name: &str) -> Result<DMatrix<f64>, CliError> {
        let rows = m.get_ref();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(self.core(
                m.span(),
                mimo_ncs::Error::DimensionMismatch(format!("{name} is empty")),
            ));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(self.core(
                m.span(),
                mimo_ncs::Error::DimensionMismatch(format!(
                    "{name} row {} has {} entries, row 1 has {cols}",
                    bad + 1,
                    rows[bad].len()
                )),
            ));
        }
        Ok(DMatrix::from_row_iterator(
            rows.len(),
            cols,
            rows.iter().flatten().copied(),
        ))
    }
}

pub fn parse_problem_file(text: &str) -> Result<ProblemFile, CliError> {
    let lines = Lines(text);
    let raw: RawProblem = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        CliError::Parse {
            line: lines.line(span.clone()),
            column: lines.column(span),
            message: e.message().to_string(),
        }
    })?;

    let a = lines.matrix(&raw.plant.a, "A")?;
    let b = lines.matrix(&raw.plant.b, "B")?;
    if b.nrows() != a.nrows() {
        return Err(lines.core(
            raw.plant.b.span(),
            mimo_ncs::Error::DimensionMismatch(format!(
                "B has {} rows but A is {}x{}",
                b.nrows(),
                a.nrows(),
                a.ncols()
            )),
        ));
    }
    let plant = match &raw.plant.x0 {
        Some(x0) => Plant::with_initial_state(a, b, DVector::from_column_slice(x0.get_ref()))
            .map_err(|e| lines.core(x0.span(), e))?,
        None => Plant::new(a, b).map_err(|e| lines.core(raw.plant.a.span(), e))?,
    };

    let ch = raw.channels.get_ref();
    let ch_span = raw.channels.span();
    let need = |v: &Option<Vector>, key: &str| -> Result<Vec<f64>, CliError> {
        v.as_ref().map(|s| s.get_ref().clone()).ok_or_else(|| {
            lines.core(
                ch_span.clone(),
                mimo_ncs::Error::InvalidInput(format!(
                    "channels of kind \"{}\" need `{key}`",
                    ch.kind.get_ref()
                )),
            )
        })
    };
    let forbid = |v: &Option<Vector>, key: &str| -> Result<(), CliError> {
        match v {
            Some(s) => Err(lines.core(
                s.span(),
                mimo_ncs::Error::InvalidInput(format!(
                    "`{key}` does not apply to channels of kind \"{}\"",
                    ch.kind.get_ref()
                )),
            )),
            None => Ok(()),
        }
    };
    let channels = match ch.kind.get_ref().as_str() {
        "awgn" => {
            forbid(&ch.means, "means")?;
            forbid(&ch.variances, "variances")?;
            ChannelEnsemble::awgn(need(&ch.powers, "powers")?, need(&ch.noise, "noise")?)
        }
        "fading" => {
            forbid(&ch.powers, "powers")?;
            forbid(&ch.noise, "noise")?;
            ChannelEnsemble::fading(need(&ch.means, "means")?, need(&ch.variances, "variances")?)
        }
        other => {
            return Err(lines.core(
                ch.kind.span(),
                mimo_ncs::Error::InvalidInput(format!(
                    "unknown channel kind \"{other}\" (expected \"awgn\" or \"fading\")"
                )),
            ))
        }
    }
    .map_err(|e| lines.core(ch_span.clone(), e))?;

    let o = raw.options;
    let options = Options {
        epsilon: o.epsilon,
        t_end: o.t_end,
        dt: o.dt,
        seed: o.seed.unwrap_or(0),
        output: o.output,
    };

    let design = match raw.design {
        Some(d) => {
            let f = lines.matrix(&d.f, "F")?;
            let u = lines.matrix(&d.u, "U")?;
            if f.shape() != (plant.m(), plant.n()) {
                return Err(lines.core(
                    d.f.span(),
                    mimo_ncs::Error::DimensionMismatch(format!(
                        "F must be {}x{}, got {}x{}",
                        plant.m(),
                        plant.n(),
                        f.nrows(),
                        f.ncols()
                    )),
                ));
            }
            if u.shape() != (channels.len(), plant.m()) {
                return Err(lines.core(
                    d.u.span(),
                    mimo_ncs::Error::DimensionMismatch(format!(
                        "U must be {}x{}, got {}x{}",
                        channels.len(),
                        plant.m(),
                        u.nrows(),
                        u.ncols()
                    )),
                ));
            }
            Some(DesignSpec {
                f,
                u,
                epsilon: *d.epsilon.get_ref(),
            })
        }
        None => None,
    };

    let decomposition = match raw.decomposition {
        Some(d) => {
            let p = lines.matrix(&d.p, "P")?;
            let q = lines.matrix(&d.q, "Q")?;
            let blocks = d
                .blocks
                .iter()
                .enumerate()
                .map(|(i, blk)| {
                    Ok(CyclicBlock {
                        a: lines.matrix(&blk.a, &format!("blocks[{i}].A"))?,
                        b: blk.b.get_ref().clone(),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Some(
                CyclicDecomposition::from_parts(&plant, p, q, blocks)
                    .map_err(|e| lines.core(d.p.span(), e))?,
            )
        }
        None => None,
    };

    Ok(ProblemFile {
        plant,
        channels,
        options,
        design,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const AWGN: &str = r#"
[plant]
A = [[4, 0, 0, 0], [0, 2, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
B = [[1, 1], [1, 1], [1, 1], [0, 1]]

[channels]
kind = "awgn"
powers = [9.1, 3.1, 4.1]
noise = [1, 1, 1]
"#;

    #[test]
    fn parses_awgn_example() {
        let pf = parse_problem_file(AWGN).unwrap();
        assert_eq!(pf.plant.n(), 4);
        assert_eq!(pf.plant.m(), 2);
        assert_eq!(pf.channels.len(), 3);
        assert_eq!(pf.plant.x0().as_slice(), &[1.0; 4]);
        assert_eq!(pf.options.seed, 0);
    }

    #[test]
    fn dimension_mismatch_reports_line() {
        let text = AWGN.replace(
            "B = [[1, 1], [1, 1], [1, 1], [0, 1]]",
            "B = [[1, 1], [1, 1], [1, 1]]",
        );
        match parse_problem_file(&text) {
            Err(CliError::Core {
                line: Some(4),
                error: mimo_ncs::Error::DimensionMismatch(_),
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_noise_is_rejected() {
        let text = AWGN.replace("noise = [1, 1, 1]", "noise = [1, -1, 1]");
        match parse_problem_file(&text) {
            Err(CliError::Core {
                error: mimo_ncs::Error::InvalidInput(_),
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = AWGN.replace("noise = [1, 1, 1]", "noise = [1, 1, 1]\ngain = 2");
        match parse_problem_file(&text) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, 10, "{message}");
                assert!(message.contains("gain"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = AWGN.replace("noise = [1, 1, 1]", "noise = [1, 1, 1]\nnoise = [2, 2, 2]");
        assert!(matches!(
            parse_problem_file(&text),
            Err(CliError::Parse { line: 10, .. })
        ));
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let text = AWGN.replace("[0, 2, 0, 0]", "[0, 2, 0]");
        assert!(matches!(
            parse_problem_file(&text),
            Err(CliError::Core {
                error: mimo_ncs::Error::DimensionMismatch(_),
                ..
            })
        ));
    }

    #[test]
    fn design_and_decomposition_sections() {
        let text = format!(
            "{AWGN}\n[design]\nF = [[-40, 36, -10, 0], [0, 0, 0, -2]]\nU = [[0.7817, 0.4714], [0.4629, 0], [-0.4179, 0.8819]]\nepsilon = 0.1\n\n[decomposition]\nP = [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]\nQ = [[1,0],[0,1]]\nblocks = [{{ A = [[4,0,0],[0,2,0],[0,0,1]], b = [1,1,1] }}, {{ A = [[1]], b = [1] }}]\n"
        );
        let pf = parse_problem_file(&text).unwrap();
        let d = pf.design.unwrap();
        assert_eq!(d.epsilon, 0.1);
        assert_eq!(d.u.shape(), (3, 2));
        let dec = pf.decomposition.unwrap();
        assert_eq!(dec.h, vec![7.0, 1.0]);
    }

    #[test]
    fn fading_kind_needs_means() {
        let text = AWGN.replace("kind = \"awgn\"", "kind = \"fading\"");
        assert!(parse_problem_file(&text).is_err());
    }
}
