//! Rendering of documents: aligned text for people, JSON for programs, CSV
//! for trajectories and prefix tables.

use std::fmt::Write;

use mimo_ncs::analysis::CovarianceTrajectory;

use crate::report::{
    AnalyzeDoc, CheckDoc, CodesignDoc, Cx, DecomposeDoc, Document, ErrorDoc, Payload, SimulateDoc,
    ValidateDoc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Machine,
    Table,
}

/// Pretty-printed JSON with a trailing newline.
pub fn machine(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

pub fn parse_machine(text: &str) -> serde_json::Result<Document> {
    serde_json::from_str(text)
}

/// Full-precision number: 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x11,x12,…,xnn,frobenius_norm` followed by one row per sample.
pub fn trajectory_csv(tr: &CovarianceTrajectory) -> String {
    let n = tr.states.first().map_or(0, |x| x.nrows());
    let mut out = String::from("t");
    for i in 1..=n {
        for j in 1..=n {
            write!(out, ",x{i}{j}").unwrap();
        }
    }
    out.push_str(",frobenius_norm\n");
    for ((t, x), f) in tr.times.iter().zip(&tr.states).zip(&tr.frobenius) {
        out.push_str(&num(*t));
        for i in 0..n {
            for j in 0..n {
                out.push(',');
                out.push_str(&num(x[(i, j)]));
            }
        }
        out.push(',');
        out.push_str(&num(*f));
        out.push('\n');
    }
    out
}

/// Ascending prefix-sum comparison as CSV.
pub fn check_table(doc: &CheckDoc) -> String {
    let mut out = String::from("j,capacity,demand,capacity_prefix,demand_prefix,slack\n");
    for r in &doc.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.j,
            num(r.capacity),
            num(r.demand),
            num(r.capacity_prefix),
            num(r.demand_prefix),
            num(r.slack)
        )
        .unwrap();
    }
    out
}

struct Text {
    out: String,
}

const KEY_WIDTH: usize = 26;

impl Text {
    fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        let gap = if key.len() < KEY_WIDTH { "" } else { "  " };
        writeln!(self.out, "{key:<KEY_WIDTH$}{gap}{value}").unwrap();
    }

    fn heading(&mut self, title: &str) {
        writeln!(self.out, "{title}").unwrap();
    }

    fn matrix(&mut self, key: &str, m: &[Vec<f64>]) {
        let cells: Vec<Vec<String>> = m
            .iter()
            .map(|r| r.iter().map(|v| format!("{:.6}", v + 0.0)).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(0);
        for (i, row) in cells.iter().enumerate() {
            let label = if i == 0 { key } else { "" };
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            self.field(label, format!("[ {} ]", line.join("  ")));
        }
        if cells.is_empty() {
            self.field(key, "[]");
        }
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{:.6}", x + 0.0)).collect();
    format!("({})", items.join(", "))
}

fn cx(z: &Cx) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

fn cx_list(v: &[Cx]) -> String {
    if v.is_empty() {
        return "none".into();
    }
    v.iter().map(cx).collect::<Vec<_>>().join(", ")
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Aligned `key  value` text.
pub fn human(doc: &Document) -> String {
    let mut t = Text { out: String::new() };
    match &doc.result {
        Payload::Validate(v) => validate(&mut t, v),
        Payload::Decompose(d) => decompose(&mut t, d),
        Payload::Check(c) => check(&mut t, c),
        Payload::Codesign(c) => codesign(&mut t, c),
        Payload::Analyze(a) => analyze(&mut t, a),
        Payload::Simulate(s) => simulate(&mut t, s),
        Payload::Error(e) => error(&mut t, e),
    }
    t.out
}

fn validate(t: &mut Text, v: &ValidateDoc) {
    t.field("states", v.n);
    t.field("inputs", v.m);
    t.field("stabilizable", yes(v.stabilizable));
    t.field("unstable", yes(v.unstable));
    t.field("axis eigenvalues", cx_list(&v.axis_eigenvalues));
    t.field(
        "uncontrollable unstable",
        cx_list(&v.uncontrollable_unstable),
    );
    t.field("entropy", format!("{:.6}", v.entropy));
    t.field("eigenvalues", cx_list(&v.eigenvalues));
}

fn decompose(t: &mut Text, d: &DecomposeDoc) {
    t.field("source", &d.source);
    t.field("cyclic index", d.k);
    t.field("seed", d.seed);
    t.field("attempt", d.attempt);
    t.matrix("P", &d.p);
    t.matrix("Q", &d.q);
    t.field("entropies", list(&d.h));
    for (i, b) in d.blocks.iter().enumerate() {
        t.matrix(&format!("block {} A", i + 1), &b.a);
        t.field(&format!("block {} b", i + 1), list(&b.b));
    }
    t.heading("checks");
    for c in &d.checks {
        t.field(
            &format!("  {}", c.name),
            format!(
                "{}  residual {}  {}",
                if c.passed { "pass" } else { "FAIL" },
                c.residual.map_or("n/a".into(), |r| format!("{r:.3e}")),
                c.detail
            ),
        );
    }
    t.field("verified", yes(d.verified));
}

fn check(t: &mut Text, c: &CheckDoc) {
    t.field("capacities", list(&c.capacities));
    t.field("demand", list(&c.demand));
    t.field("relation", &c.relation);
    t.heading("ascending prefix sums");
    for r in &c.rows {
        let cmp = if r.slack > c.strict_margin { ">" } else { "<=" };
        t.field(
            &format!("  j = {}", r.j),
            format!(
                "{:.6} {cmp} {:.6}  (slack {:.6})",
                r.capacity_prefix, r.demand_prefix, r.slack
            ),
        );
    }
    t.field("feasible", yes(c.holds));
    if let Some(j) = c.violated_prefix {
        t.field("first violated prefix", j);
    }
    if let Some(k) = &c.corollary {
        t.heading("total-capacity criterion");
        t.field(
            "  applicable",
            format!("{} ({})", yes(k.applicable), k.reason),
        );
        t.field(
            "  total vs entropy",
            format!("{:.6} vs {:.6}", k.total_capacity, k.entropy),
        );
        t.field("  simplified verdict", yes(k.simplified));
        t.field("  agrees with full test", yes(k.agree));
    }
}

fn codesign(t: &mut Text, c: &CodesignDoc) {
    t.field("channel", &c.channel);
    t.matrix("F", &c.f);
    t.matrix("T", &c.t);
    t.matrix("R", &c.r);
    t.field("epsilon", format!("{}", c.epsilon));
    t.field("gamma", list(&c.gamma));
    t.matrix("U", &c.u);
    t.field("active inputs", c.active_inputs);
    t.field("margins", list(&c.margins));
    t.field("codec residual", format!("{:.3e}", c.codec_residual));
    for n in &c.notes {
        t.field("note", n);
    }
}

fn analyze(t: &mut Text, a: &AnalyzeDoc) {
    t.field("channel", &a.channel);
    t.field("verdict", &a.verdict);
    t.field("closed-loop spectrum", cx_list(&a.closed_loop_spectrum));
    if let Some(p) = &a.channel_powers {
        t.field("channel powers", list(p));
    }
    if let Some(p) = &a.power_limits {
        t.field("power limits", list(p));
    }
    if let Some(ms) = a.ms_norm {
        t.field("ms norm", format!("{ms:.6}"));
    }
    if let Some(r) = a.covariance_decay_rate {
        t.field("second-moment decay rate", format!("{r:.6}"));
    }
    t.field("margins", list(&a.margins));
    t.field("epsilon", format!("{}", a.design.epsilon));
    t.matrix("F", &a.design.f);
}

fn simulate(t: &mut Text, s: &SimulateDoc) {
    t.field("t_end", format!("{}", s.t_end));
    t.field("dt", format!("{}", s.dt));
    t.field("samples", s.samples);
    t.field("initial ||X||_F", format!("{:.6e}", s.initial_frobenius));
    match s.final_frobenius {
        Some(f) => t.field("final ||X||_F", format!("{f:.6e}")),
        None => t.field("final ||X||_F", "n/a"),
    }
    match s.decay_ratio {
        Some(r) => t.field("decay ratio", format!("{r:.6e}")),
        None => t.field("decay ratio", "infinite"),
    }
    if let Some(d) = s.diverged_at {
        t.field("diverged at", format!("t = {d}"));
    }
    t.field("ms norm", format!("{:.6}", s.ms_norm));
    t.field("consistency", &s.consistency);
    if let Some(p) = &s.trajectory_file {
        t.field("trajectory", p);
    }
}

fn error(t: &mut Text, e: &ErrorDoc) {
    t.field("error", &e.code);
    if let Some(l) = e.line {
        t.field("line", l);
    }
    t.field("message", &e.message);
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn three_samples_give_four_lines() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let tr = CovarianceTrajectory {
            times: vec![0.0, 0.1, 0.2],
            states: vec![x.clone(), x.clone() * 0.5, x.clone() * 0.25],
            frobenius: vec![x.norm(), x.norm() * 0.5, x.norm() * 0.25],
        };
        let csv = trajectory_csv(&tr);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "t,x11,x12,x21,x22,frobenius_norm");
        assert_eq!(lines[1].split(',').count(), 6);
        assert!(lines[2].starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = 0.1f64 + 0.2;
        let s = num(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(s, "3.0000000000000004e-1");
    }

    #[test]
    fn error_text_is_aligned() {
        let doc = Document {
            schema: crate::report::SCHEMA.into(),
            command: "check".into(),
            exit_code: 2,
            result: Payload::Error(ErrorDoc {
                code: "cli.parse".into(),
                message: "bad".into(),
                line: Some(3),
            }),
        };
        let text = human(&doc);
        for l in text.lines() {
            assert!(l.len() > KEY_WIDTH);
            assert_ne!(l.as_bytes()[KEY_WIDTH], b' ');
        }
        assert!(text.contains("cli.parse"));
    }
}
