//! Text, JSONL and SVG renderings of training and evaluation reports.

use amrq_core::model::TrainReport;
use amrq_core::stats::{EvalReport, QualityClass};
use serde_json::json;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"))
}

/// Aligned plain-text table.
pub fn eval_table(r: &EvalReport) -> String {
    let width = r.dimensions.iter().map(|d| d.name.len()).max().unwrap_or(0).max("dimension".len());
    let mut s = format!("samples: {}\n\n{:<width$}  {:>8}  {:>8}\n", r.samples, "dimension", "pearson", "rmse");
    for d in &r.dimensions {
        s.push_str(&format!("{:<width$}  {:>8}  {:>8.4}\n", d.name, opt(d.pearson), d.rmse));
    }
    s.push_str(&format!("{:<width$}  {:>8}\n", "mean", opt(r.mean_pearson())));
    if let Some(c) = &r.classification {
        s.push_str("\nfive-way classification\n");
        for (class, f1) in QualityClass::ALL.iter().zip(&c.per_class_f1) {
            s.push_str(&format!("  {:<10} f1 {}\n", class.label(), opt(*f1)));
        }
        s.push_str(&format!("  macro f1   {:.4}\n  kappa      {:.4}\n", c.macro_f1, c.kappa));
    }
    if !r.significance.is_empty() {
        s.push_str("\nsignificance\n");
        for t in &r.significance {
            s.push_str(&format!("  {}  statistic {:.4}  p {:.4}\n", t.name, t.statistic, t.p_value));
        }
    }
    s
}

/// One JSON object per line: dimensions, classification, tests, summary.
pub fn eval_jsonl(r: &EvalReport) -> String {
    let mut lines = Vec::new();
    for d in &r.dimensions {
        lines.push(json!({"kind": "dimension", "name": d.name, "pearson": d.pearson, "rmse": d.rmse}));
    }
    if let Some(c) = &r.classification {
        lines.push(json!({
            "kind": "classification",
            "classes": QualityClass::ALL.iter().map(|c| c.label()).collect::<Vec<_>>(),
            "per_class_f1": c.per_class_f1,
            "macro_f1": c.macro_f1,
            "kappa": c.kappa,
        }));
    }
    for t in &r.significance {
        lines.push(json!({"kind": "significance", "name": t.name, "statistic": t.statistic, "p_value": t.p_value}));
    }
    lines.push(json!({"kind": "summary", "samples": r.samples, "mean_pearson": r.mean_pearson()}));
    lines.iter().map(|l| format!("{l}\n")).collect()
}

/// One line per epoch, then the selection.
pub fn train_jsonl(r: &TrainReport, names: &[String]) -> String {
    let mut out = String::new();
    for e in &r.epochs {
        let per_dim: serde_json::Map<String, serde_json::Value> =
            names.iter().cloned().zip(e.dev_pearson.iter().map(|v| json!(v))).collect();
        let line = json!({
            "kind": "epoch",
            "epoch": e.epoch,
            "train_loss": e.train_loss,
            "dev_pearson": per_dim,
            "dev_mean_pearson": e.dev_mean_pearson,
            "seconds": e.seconds,
        });
        out.push_str(&format!("{line}\n"));
    }
    out.push_str(&format!("{}\n", json!({"kind": "selected", "epoch": r.selected_epoch})));
    out
}

pub fn train_table(r: &TrainReport) -> String {
    let mut s = String::from("epoch  train_loss  dev_mean_rho  seconds\n");
    for e in &r.epochs {
        let mark = if e.epoch == r.selected_epoch { " *" } else { "" };
        s.push_str(&format!("{:>5}  {:>10.5}  {:>12.4}  {:>7.1}{mark}\n", e.epoch, e.train_loss, e.dev_mean_pearson, e.seconds));
    }
    s
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const M: f64 = 48.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(x_label: &str, y_label: &str) -> String {
    format!(
        "<line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ly}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{xl}</text>\n\
         <text x=\"14\" y=\"{cy}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {cy})\">{yl}</text>\n",
        b = H - M,
        r = W - M,
        cx = W / 2.0,
        ly = H - 12.0,
        cy = H / 2.0,
        xl = escape(x_label),
        yl = escape(y_label),
    )
}

/// Predicted against gold values on the unit square.
pub fn scatter_svg(title: &str, gold: &[f64], pred: &[f64]) -> String {
    let mut s = svg_open(title);
    s.push_str(&axes("gold", "predicted"));
    let (pw, ph) = (W - 2.0 * M, H - 2.0 * M);
    s.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{M}\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n",
        H - M,
        W - M
    ));
    for (g, p) in gold.iter().zip(pred) {
        let x = M + g.clamp(0.0, 1.0) * pw;
        let y = H - M - p.clamp(0.0, 1.0) * ph;
        s.push_str(&format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n"));
    }
    s.push_str("</svg>\n");
    s
}

/// One bar per named value in [-1, 1]; missing values are left blank.
pub fn bar_svg(title: &str, names: &[String], values: &[Option<f64>]) -> String {
    let mut s = svg_open(title);
    s.push_str(&axes("", "pearson"));
    let (pw, ph) = (W - 2.0 * M, H - 2.0 * M);
    let zero = M + ph / 2.0;
    s.push_str(&format!("<line x1=\"{M}\" y1=\"{zero}\" x2=\"{}\" y2=\"{zero}\" stroke=\"#999\"/>\n", W - M));
    let slot = pw / names.len().max(1) as f64;
    for (i, (name, v)) in names.iter().zip(values).enumerate() {
        let x = M + i as f64 * slot;
        if let Some(v) = v {
            let h = v.clamp(-1.0, 1.0) * ph / 2.0;
            let (y, hh) = if h >= 0.0 { (zero - h, h) } else { (zero, -h) };
            s.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{hh:.2}\" fill=\"#ff7f0e\"><title>{} {v:.4}</title></rect>\n",
                x + slot * 0.1,
                slot * 0.8,
                escape(name)
            ));
        }
        let tx = x + slot / 2.0;
        let ty = H - M + 10.0;
        s.push_str(&format!(
            "<text x=\"{tx:.2}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"8\" transform=\"rotate(45 {tx:.2} {ty:.2})\">{}</text>\n",
            escape(name)
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use amrq_core::stats::evaluate;

    fn report() -> EvalReport {
        let gold: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        evaluate(&gold, &gold, &["smatch_f1".to_owned()], Some(0)).unwrap()
    }

    #[test]
    fn jsonl_lines_parse() {
        let text = eval_jsonl(&report());
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0]["pearson"], 1.0);
        assert_eq!(lines[1]["kappa"], 1.0);
        assert_eq!(lines[2]["samples"], 10);
    }

    #[test]
    fn table_and_svg_render() {
        let t = eval_table(&report());
        assert!(t.contains("smatch_f1") && t.contains("kappa"));
        let svg = scatter_svg("a < b", &[0.0, 1.0], &[0.5, 0.5]);
        assert!(svg.starts_with("<svg") && svg.contains("a &lt; b") && svg.matches("<circle").count() == 2);
        let bars = bar_svg("rho", &["x".into(), "y".into()], &[Some(0.5), None]);
        assert_eq!(bars.matches("<rect x=").count(), 1);
    }
}
