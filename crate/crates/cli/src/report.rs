//! Boxed plain-text rendering of a classification report.

use dynclass_core::{landscape_interpretation, ClassificationReport, Detail};

/// Minimum inner width of the box, in characters.
const INNER_WIDTH: usize = 62;

/// One decimal place, with negative zero printed as `0.0`.
pub fn coord(x: f64) -> String {
    let s = format!("{x:.1}");
    if s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

/// Two significant figures; plain notation for moderate magnitudes.
pub fn two_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // round first so that 0.0999 becomes 0.10, not 0.100
    let rounded: f64 = format!("{x:.1e}").parse().unwrap_or(x);
    let mag = rounded.abs().log10().floor() as i32;
    if (-3..4).contains(&mag) {
        format!("{rounded:.*}", (1 - mag).max(0) as usize)
    } else {
        format!("{rounded:.1e}")
    }
}

fn manifolds_line(report: &ClassificationReport) -> String {
    match report.has_transverse_manifolds {
        _ if report.saddle_count() == 0 => "N/A (no saddles)".to_string(),
        Some(true) => "Yes".to_string(),
        Some(false) => "No".to_string(),
        None => match report.details.get("check_manifolds") {
            Some(Detail::Flag(false)) => "Unknown (check disabled)".to_string(),
            _ => "Unknown (not checked)".to_string(),
        },
    }
}

/// The report as boxed sections; content lines come first in each section.
pub fn report_sections(report: &ClassificationReport) -> Vec<Vec<String>> {
    let mut points = vec![format!("Fixed Points: {}", report.fixed_points.len())];
    for p in &report.fixed_points {
        let coords: Vec<String> = p.location.iter().map(|&x| coord(x)).collect();
        points.push(format!("  • {} at [{}]", p.kind.description(), coords.join(", ")));
    }
    points.push(format!("Periodic Orbits: {}", report.periodic_orbits.len()));
    for o in &report.periodic_orbits {
        let kind = if o.is_stable { "Stable" } else { "Unstable" };
        points.push(format!("  • {kind} limit cycle, period {}", format_period(o.period)));
    }
    vec![
        vec!["System Classification Report".to_string()],
        vec![
            format!("System Class: {}", report.system_class),
            format!("Confidence: {:.2}", report.confidence),
        ],
        points,
        vec![
            format!("Jacobian Symmetry Error: {:.1e}", report.jacobian_symmetry),
            format!("Curl/Gradient Ratio: {}", two_sig(report.curl_gradient_ratio)),
            format!("Manifolds Transverse: {}", manifolds_line(report)),
        ],
        vec![format!("Landscape: {}", landscape_interpretation(report.system_class).description)],
    ]
}

fn format_period(t: f64) -> String {
    format!("{t:.4}")
}

pub fn render_report(report: &ClassificationReport) -> String {
    let sections = report_sections(report);
    let width = sections
        .iter()
        .flatten()
        .map(|l| l.chars().count() + 2)
        .max()
        .unwrap_or(0)
        .max(INNER_WIDTH);
    let rule = "═".repeat(width);
    let mut out = format!("╔{rule}╗\n");
    for (i, section) in sections.iter().enumerate() {
        if i > 0 {
            out.push_str(&format!("╠{rule}╣\n"));
        }
        for line in section {
            let len = line.chars().count();
            if i == 0 {
                let left = (width - len) / 2;
                out.push_str(&format!("║{}{line}{}║\n", " ".repeat(left), " ".repeat(width - len - left)));
            } else {
                out.push_str(&format!("║ {line}{}║\n", " ".repeat(width - len - 1)));
            }
        }
    }
    out.push_str(&format!("╚{rule}╝\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_drop_negative_zero() {
        assert_eq!(coord(-1e-12), "0.0");
        assert_eq!(coord(0.68), "0.7");
        assert_eq!(coord(-8.485), "-8.5");
    }

    #[test]
    fn two_significant_figures() {
        assert_eq!(two_sig(0.0), "0.0");
        assert_eq!(two_sig(0.8493), "0.85");
        assert_eq!(two_sig(0.0999), "0.10");
        assert_eq!(two_sig(0.01234), "0.012");
        assert_eq!(two_sig(12.34), "12");
        assert_eq!(two_sig(3.3e-7), "3.3e-7");
        assert_eq!(two_sig(123456.0), "1.2e5");
    }
}
