//! Disk diagrams: zeros, critical points, the branch locus with its cut
//! polyline, the monodromy loops and the working circle.

use std::fmt::Write;

use blaschke_core::monodromy::gamma_polyline;
use blaschke_core::nth_root::build_branch;
use blaschke_core::{FiniteBlaschkeProduct, MonodromyResult};
use num_complex::Complex64;

const SIZE: f64 = 480.0;
const SCALE: f64 = 210.0;

const STYLE: &str = "\
.unit-circle{fill:#f7f7f2;stroke:#222;stroke-width:1.5}
.working-circle{fill:none;stroke:#888;stroke-dasharray:4 3}
.cut{stroke:#c9a227;stroke-width:1}
.cut-gamma{fill:none;stroke:#b03a2e;stroke-width:1}
.loop{fill:none;stroke:#2e86c1;stroke-width:0.8}
.zero{fill:#222}
.critical-point{fill:none;stroke:#b03a2e;stroke-width:1.5}
.branch-point{fill:#b03a2e}
.base-point{fill:#27ae60}";

fn x(z: Complex64) -> f64 {
    SIZE / 2.0 + SCALE * z.re
}

fn y(z: Complex64) -> f64 {
    SIZE / 2.0 - SCALE * z.im
}

fn points(path: &[Complex64]) -> String {
    path.iter()
        .map(|&z| format!("{:.3},{:.3}", x(z), y(z)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn marker(out: &mut String, class: &str, z: Complex64, r: f64) {
    writeln!(
        out,
        r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="{r}"/>"#,
        x(z),
        y(z)
    )
    .unwrap();
}

pub fn render(phi: &FiniteBlaschkeProduct, result: &MonodromyResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, "<style>\n{STYLE}\n</style>").unwrap();
    let c = Complex64::new(0.0, 0.0);
    writeln!(
        out,
        r#"<circle class="unit-circle" cx="{:.3}" cy="{:.3}" r="{SCALE}"/>"#,
        x(c),
        y(c)
    )
    .unwrap();

    if !result.locus.points.is_empty() {
        writeln!(
            out,
            r#"<circle class="working-circle" cx="{:.3}" cy="{:.3}" r="{:.3}"/>"#,
            x(c),
            y(c),
            SCALE * result.frame.base_radius
        )
        .unwrap();
        for (a, b) in build_branch(phi).cut_segments {
            writeln!(
                out,
                r#"<line class="cut" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                x(a),
                y(a),
                x(b),
                y(b)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<polyline class="cut-gamma" points="{}"/>"#,
            points(&gamma_polyline(&result.locus))
        )
        .unwrap();
        for lp in &result.loops {
            writeln!(
                out,
                r#"<polyline class="loop" points="{}"/>"#,
                points(&lp.vertices)
            )
            .unwrap();
        }
    }

    for &a in phi.zeros() {
        marker(&mut out, "zero", a, 3.0);
    }
    for cp in &result.locus.critical_points {
        marker(&mut out, "critical-point", cp.point, 5.0);
    }
    for &e in &result.locus.points {
        marker(&mut out, "branch-point", e, 2.0);
    }
    if !result.locus.points.is_empty() {
        marker(&mut out, "base-point", result.frame.base_point, 3.0);
    }
    out.push_str("</svg>\n");
    out
}
