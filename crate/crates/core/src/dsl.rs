//! Line-oriented pulse-sequence language.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! detuning f=-5kHz
//! pulse angle=pi/2
//! wait t=1ms
//! pulse angle=pi mode=detuned
//! wait t=1ms
//! dephase C=0.8
//! pulse angle=pi/2 phase=0.1
//! ```
//!
//! Angles accept `pi`, `pi/<number>` or a radian literal. Durations and
//! frequencies carry explicit units. The `dephase` statement must immediately
//! precede the final pulse, mirroring where the coherence factor acts in the
//! echo sequence.

use std::f64::consts::{PI, TAU};

use crate::error::{ParseError, ParseErrorKind};
use crate::spin::{PulseMode, PulseSpec, SequenceElement, SequenceSpec};
use crate::units::{inverse_scaled, parse_quantity, Dimension};

/// A parsed program together with its text and a source map.
#[derive(Debug, Clone)]
pub struct SequenceSource {
    pub text: String,
    pub sequence: SequenceSpec,
    /// (line, column) of the statement that produced each sequence element.
    pub spans: Vec<(usize, usize)>,
}

/// Parses a program into a validated [`SequenceSpec`].
pub fn parse_sequence(text: &str) -> Result<SequenceSpec, ParseError> {
    Ok(parse_sequence_source(text)?.sequence)
}

/// Parses a program, keeping the source map.
pub fn parse_sequence_source(text: &str) -> Result<SequenceSource, ParseError> {
    let mut elements: Vec<SequenceElement> = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut detuning: Option<f64> = None;
    let mut dephase: Option<(usize, usize, f64)> = None;
    // index into `elements` right after which the dephase statement appeared
    let mut dephase_position: Option<usize> = None;

    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let code = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if code.trim().is_empty() {
            continue;
        }
        let tokens = tokenize(code);
        let (keyword, kw_col) = tokens[0].clone();
        let args = &tokens[1..];
        match keyword.as_str() {
            "pulse" => {
                let mut angle: Option<f64> = None;
                let mut phase = 0.0;
                let mut mode = PulseMode::Ideal;
                for (tok, col) in args {
                    let (key, value) = split_key_value(tok, line_no, *col)?;
                    match key {
                        "angle" => angle = Some(parse_angle(value, line_no, *col)?),
                        "phase" => {
                            phase = value.parse().map_err(|_| ParseError {
                                line: line_no,
                                column: *col,
                                kind: ParseErrorKind::Syntax,
                                message: format!("cannot parse phase {value:?} as radians"),
                                expected: vec!["<radians>".into()],
                            })?
                        }
                        "mode" => {
                            mode = match value {
                                "ideal" => PulseMode::Ideal,
                                "detuned" => PulseMode::Detuned,
                                other => {
                                    return Err(ParseError {
                                        line: line_no,
                                        column: *col,
                                        kind: ParseErrorKind::Syntax,
                                        message: format!("unknown pulse mode {other:?}"),
                                        expected: vec!["ideal".into(), "detuned".into()],
                                    })
                                }
                            }
                        }
                        other => {
                            return Err(ParseError {
                                line: line_no,
                                column: *col,
                                kind: ParseErrorKind::Syntax,
                                message: format!("unknown pulse field {other:?}"),
                                expected: vec!["angle".into(), "phase".into(), "mode".into()],
                            })
                        }
                    }
                }
                let Some(angle) = angle else {
                    return Err(ParseError {
                        line: line_no,
                        column: kw_col,
                        kind: ParseErrorKind::Syntax,
                        message: "pulse statement is missing its angle".into(),
                        expected: vec!["angle=<pi|pi/2|radians>".into()],
                    });
                };
                elements.push(SequenceElement::Pulse(PulseSpec {
                    nominal_angle: angle,
                    rabi_frequency: 0.0,
                    phase,
                    mode,
                }));
                spans.push((line_no, kw_col));
            }
            "wait" => {
                let (value, col) = require_single(args, "t", line_no, kw_col, "t=<duration>")?;
                let duration = parse_quantity(value, Dimension::Time).map_err(|e| ParseError {
                    line: line_no,
                    column: col,
                    kind: ParseErrorKind::Syntax,
                    message: e.to_string(),
                    expected: vec!["<number><ms|us|s>".into()],
                })?;
                if duration < 0.0 {
                    return Err(ParseError {
                        line: line_no,
                        column: col,
                        kind: ParseErrorKind::Semantic,
                        message: format!("negative wait duration {value:?}"),
                        expected: vec![],
                    });
                }
                elements.push(SequenceElement::Delay(duration));
                spans.push((line_no, kw_col));
            }
            "dephase" => {
                let (value, col) = require_single(args, "C", line_no, kw_col, "C=<0..1>")?;
                let c: f64 = value.parse().map_err(|_| ParseError {
                    line: line_no,
                    column: col,
                    kind: ParseErrorKind::Syntax,
                    message: format!("cannot parse coherence factor {value:?}"),
                    expected: vec!["<float in [0,1]>".into()],
                })?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(ParseError {
                        line: line_no,
                        column: col,
                        kind: ParseErrorKind::Semantic,
                        message: format!("coherence factor {c} outside [0, 1]"),
                        expected: vec![],
                    });
                }
                if dephase.is_some() {
                    return Err(ParseError {
                        line: line_no,
                        column: kw_col,
                        kind: ParseErrorKind::Semantic,
                        message: "duplicate dephase statement".into(),
                        expected: vec![],
                    });
                }
                dephase = Some((line_no, kw_col, c));
                dephase_position = Some(elements.len());
            }
            "detuning" => {
                let (value, col) = require_single(args, "f", line_no, kw_col, "f=<frequency>")?;
                let f = parse_quantity(value, Dimension::Frequency).map_err(|e| ParseError {
                    line: line_no,
                    column: col,
                    kind: ParseErrorKind::Syntax,
                    message: e.to_string(),
                    expected: vec!["<number><kHz|Hz>".into()],
                })?;
                if detuning.is_some() {
                    return Err(ParseError {
                        line: line_no,
                        column: kw_col,
                        kind: ParseErrorKind::Semantic,
                        message: "duplicate detuning statement".into(),
                        expected: vec![],
                    });
                }
                detuning = Some(f);
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    column: kw_col,
                    kind: ParseErrorKind::Syntax,
                    message: format!("unknown statement {other:?}"),
                    expected: vec![
                        "pulse".into(),
                        "wait".into(),
                        "dephase".into(),
                        "detuning".into(),
                    ],
                })
            }
        }
    }

    if let Some((line, column, _)) = dephase {
        // the coherence factor acts right before the final pulse
        let final_pulse = elements.iter().rposition(|el| matches!(el, SequenceElement::Pulse(_)));
        let ok = matches!(
            (dephase_position, final_pulse),
            (Some(pos), Some(fp)) if pos == fp
        );
        if !ok {
            return Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::Semantic,
                message: "dephase must immediately precede the final pulse".into(),
                expected: vec![],
            });
        }
    }

    let mut sequence = SequenceSpec::new(elements);
    sequence.microwave_detuning = detuning.unwrap_or(0.0);
    sequence.dephasing_factor = dephase.map(|(_, _, c)| c);
    Ok(SequenceSource { text: text.to_string(), sequence, spans })
}

/// Canonical text form; reparsing yields a structurally identical sequence.
pub fn pretty_print(seq: &SequenceSpec) -> String {
    let mut out = String::new();
    if seq.microwave_detuning != 0.0 {
        out.push_str(&format!("detuning f={}\n", format_frequency(seq.microwave_detuning)));
    }
    let final_pulse = seq.elements.iter().rposition(|el| matches!(el, SequenceElement::Pulse(_)));
    for (i, el) in seq.elements.iter().enumerate() {
        if Some(i) == final_pulse {
            if let Some(c) = seq.dephasing_factor {
                out.push_str(&format!("dephase C={c}\n"));
            }
        }
        match el {
            SequenceElement::Pulse(p) => {
                out.push_str(&format!("pulse angle={}", format_angle(p.nominal_angle)));
                if p.phase != 0.0 {
                    out.push_str(&format!(" phase={}", p.phase));
                }
                if p.mode == PulseMode::Detuned {
                    out.push_str(" mode=detuned");
                }
                out.push('\n');
            }
            SequenceElement::Delay(t) => out.push_str(&format!("wait t={t}s\n")),
        }
    }
    out
}

/// Formats an angular frequency with a unit whose scale inverts it exactly
/// when one exists, so a reparse reproduces the value bit-for-bit. Values
/// that entered through the parser always have such a unit (their own).
fn format_frequency(omega: f64) -> String {
    for (suffix, scale) in
        [("kHz", 1e3 * TAU), ("Hz", TAU), ("MHz", 1e6 * TAU), ("GHz", 1e9 * TAU)]
    {
        let d = inverse_scaled(omega, scale);
        if d * scale == omega {
            return format!("{d}{suffix}");
        }
    }
    format!("{}Hz", omega / TAU)
}

fn format_angle(angle: f64) -> String {
    if angle == PI {
        "pi".into()
    } else if angle == PI / 2.0 {
        "pi/2".into()
    } else {
        format!("{angle}")
    }
}

fn parse_angle(value: &str, line: usize, column: usize) -> Result<f64, ParseError> {
    let bad = |message: String| ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax,
        message,
        expected: vec!["pi".into(), "pi/<number>".into(), "<radians>".into()],
    };
    if value == "pi" {
        return Ok(PI);
    }
    if let Some(divisor) = value.strip_prefix("pi/") {
        let d: f64 =
            divisor.parse().map_err(|_| bad(format!("cannot parse angle divisor {divisor:?}")))?;
        if d == 0.0 {
            return Err(bad("angle divisor is zero".into()));
        }
        return Ok(PI / d);
    }
    value.parse().map_err(|_| bad(format!("cannot parse angle {value:?}")))
}

fn split_key_value(
    token: &str,
    line: usize,
    column: usize,
) -> Result<(&str, &str), ParseError> {
    token.split_once('=').ok_or_else(|| ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax,
        message: format!("expected key=value, found {token:?}"),
        expected: vec!["<key>=<value>".into()],
    })
}

fn require_single<'a>(
    args: &'a [(String, usize)],
    key: &str,
    line: usize,
    kw_col: usize,
    form: &str,
) -> Result<(&'a str, usize), ParseError> {
    if args.len() != 1 {
        return Err(ParseError {
            line,
            column: kw_col,
            kind: ParseErrorKind::Syntax,
            message: format!("statement takes exactly one field {form}"),
            expected: vec![form.into()],
        });
    }
    let (token, col) = &args[0];
    let (k, v) = split_key_value(token, line, *col)?;
    if k != key {
        return Err(ParseError {
            line,
            column: *col,
            kind: ParseErrorKind::Syntax,
            message: format!("unknown field {k:?}"),
            expected: vec![form.into()],
        });
    }
    Ok((v, *col))
}

/// Whitespace tokenizer keeping 1-based column offsets.
fn tokenize(line: &str) -> Vec<(String, usize)> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push((std::mem::take(&mut current), start + 1));
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push((current, start + 1));
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn canonical_ramsey_program() {
        let seq = parse_sequence("pulse angle=pi/2\nwait t=0.3ms\npulse angle=pi/2").unwrap();
        assert_eq!(seq.elements.len(), 3);
        match &seq.elements[1] {
            SequenceElement::Delay(t) => assert_relative_eq!(*t, 0.3e-3, epsilon = 1e-18),
            other => panic!("expected delay, got {other:?}"),
        }
        assert_eq!(seq.dephasing_factor, None);
        assert_eq!(seq.microwave_detuning, 0.0);
    }

    #[test]
    fn spin_echo_program_field_by_field() {
        let text = "pulse angle=pi/2\nwait t=1ms\npulse angle=pi\nwait t=1ms\ndephase C=0.8\npulse angle=pi/2 phase=0.1";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.elements.len(), 5);
        assert_eq!(seq.dephasing_factor, Some(0.8));
        assert_relative_eq!(seq.inferred_echo_time().unwrap(), 2e-3, epsilon = 1e-18);
        match &seq.elements[4] {
            SequenceElement::Pulse(p) => {
                assert_eq!(p.phase, 0.1);
                assert_eq!(p.nominal_angle, PI / 2.0);
                assert_eq!(p.mode, PulseMode::Ideal);
            }
            other => panic!("expected pulse, got {other:?}"),
        }
        match &seq.elements[2] {
            SequenceElement::Pulse(p) => assert_eq!(p.nominal_angle, PI),
            other => panic!("expected pulse, got {other:?}"),
        }
    }

    #[test]
    fn negative_wait_is_a_semantic_error_with_location() {
        let err = parse_sequence("wait t=-1ms").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
        assert_eq!(err.line, 1);
    }

    #[test]
    fn unknown_statement_reports_expected_tokens() {
        let err = parse_sequence("pulse angle=pi\nfrobnicate x=1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert_eq!(err.line, 2);
        assert_eq!(err.column, 1);
        assert!(err.expected.contains(&"pulse".to_string()));
    }

    #[test]
    fn bad_mode_lists_alternatives() {
        let err = parse_sequence("pulse angle=pi mode=sideways").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert!(err.expected == vec!["ideal".to_string(), "detuned".to_string()]);
        assert!(err.column > 1);
    }

    #[test]
    fn dephase_must_precede_final_pulse() {
        let err = parse_sequence("dephase C=0.5\nwait t=1ms\npulse angle=pi").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
        let err = parse_sequence("pulse angle=pi\ndephase C=0.5").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
        assert!(parse_sequence("dephase C=0.5\npulse angle=pi").is_ok());
    }

    #[test]
    fn coherence_out_of_range_rejected() {
        let err = parse_sequence("dephase C=1.5\npulse angle=pi").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Semantic);
    }

    #[test]
    fn detuning_round_trips_through_hertz() {
        let text = "detuning f=-5kHz\npulse angle=pi/2\nwait t=0.3ms\npulse angle=pi/2";
        let seq = parse_sequence(text).unwrap();
        assert_relative_eq!(seq.microwave_detuning, -TAU * 5e3, epsilon = 1e-9);
        let printed = pretty_print(&seq);
        let again = parse_sequence(&printed).unwrap();
        assert_eq!(seq, again);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let seq = parse_sequence("# a comment\n\npulse angle=pi  # trailing\n").unwrap();
        assert_eq!(seq.elements.len(), 1);
    }

    #[test]
    fn source_map_points_at_statements() {
        let src = parse_sequence_source("# lead\npulse angle=pi\n  wait t=1ms\n").unwrap();
        assert_eq!(src.spans, vec![(2, 1), (3, 3)]);
        assert_eq!(src.spans.len(), src.sequence.elements.len());
    }

    proptest! {
        // pretty-print(parse(text)) reparses to a structurally identical
        // sequence for arbitrary generated programs
        #[test]
        fn pretty_print_round_trip(
            angles in proptest::collection::vec(0.01f64..6.2, 1..6),
            waits_us in proptest::collection::vec(0.0f64..2000.0, 0..5),
            phase in -3.0f64..3.0,
            detuning_khz in -20.0f64..20.0,
            c in proptest::option::of(0.0f64..1.0),
            detuned in proptest::bool::ANY,
        ) {
            let mut text = String::new();
            text.push_str(&format!("detuning f={detuning_khz}kHz\n"));
            for (i, a) in angles.iter().enumerate() {
                if i == angles.len() - 1 {
                    if let Some(c) = c {
                        text.push_str(&format!("dephase C={c}\n"));
                    }
                }
                let mode = if detuned { " mode=detuned" } else { "" };
                if i % 2 == 0 {
                    text.push_str(&format!("pulse angle={a} phase={phase}{mode}\n"));
                } else {
                    text.push_str(&format!("pulse angle={a}{mode}\n"));
                }
                if let Some(w) = waits_us.get(i) {
                    text.push_str(&format!("wait t={w}us\n"));
                }
            }
            let seq = parse_sequence(&text).unwrap();
            let printed = pretty_print(&seq);
            let reparsed = parse_sequence(&printed).unwrap();
            prop_assert_eq!(seq, reparsed);
        }
    }
}
