//! Partition export: CSV rows per sample, or an SVG atlas with filled
//! sample cells, border curves and a legend of optimal words.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{self, Write};

use fovsynth::synthesis::{Partition, RegionLabel, Window};
use fovsynth::{PolarPoint, Synthesis};

use crate::SCHEMA_VERSION;

pub fn write_csv(w: &mut dyn Write, s: &Synthesis, part: &Partition) -> io::Result<()> {
    writeln!(w, "schema_version,rho,psi,label,word,length")?;
    for p in &part.samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            SCHEMA_VERSION,
            p.point.rho,
            p.point.psi,
            p.label,
            caller_word(s, &p.label),
            p.length
        )?;
    }
    Ok(())
}

/// The word as it reads in the caller's frame.
fn caller_word(s: &Synthesis, label: &RegionLabel) -> String {
    let mut w = label.word(s.geom.case);
    if s.reduction.mirror {
        use fovsynth::synthesis::Symbol::*;
        for sym in &mut w.0 {
            *sym = match *sym {
                E1(d) => E2(d),
                E2(d) => E1(d),
                x => x,
            };
        }
    }
    if s.reduction.reverse_time {
        w = fovsynth::Word(w.0.iter().map(|x| x.flipped()).collect());
    }
    w.to_string()
}

/// Distinct fill for the k-th label: golden-angle hue steps never repeat.
fn color(k: usize) -> String {
    let h = (k as f64 * 137.508) % 360.0 / 60.0;
    let (sat, light) = (0.65, [0.72, 0.58, 0.84][k % 3]);
    let c = (1.0 - (2.0 * light - 1.0f64).abs()) * sat;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = light - c / 2.0;
    let byte = |v: f64| ((v + m) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

const SIZE: f64 = 800.0;

pub fn write_svg(w: &mut dyn Write, s: &Synthesis, part: &Partition, window: Window) -> io::Result<()> {
    let scale = 0.46 * SIZE / window.rho_max;
    let xy = |p: &PolarPoint| {
        let (x, y) = p.to_xy();
        (SIZE / 2.0 + scale * x, SIZE / 2.0 - scale * y)
    };
    let mut colors: BTreeMap<RegionLabel, String> = BTreeMap::new();
    for p in &part.samples {
        let n = colors.len();
        colors.entry(p.label).or_insert_with(|| color(n));
    }
    let legend_h = 20.0 * colors.len() as f64 + 30.0;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{}" data-schema-version="{SCHEMA_VERSION}">"#,
        SIZE + legend_h
    )?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;

    // one annular sector per sample, spanning half a grid step each way
    let mut rhos: Vec<f64> = part.samples.iter().map(|p| p.point.rho).collect();
    rhos.dedup();
    let n_psi = part.samples.len() / rhos.len().max(1);
    let drho = if rhos.len() > 1 { rhos[1] - rhos[0] } else { window.rho_max - window.rho_min };
    let dpsi = TAU / n_psi.max(1) as f64;
    writeln!(w, "<g>")?;
    for p in &part.samples {
        let (r0, r1) = ((p.point.rho - drho / 2.0).max(0.0), p.point.rho + drho / 2.0);
        let (a0, a1) = (p.point.psi - dpsi / 2.0, p.point.psi + dpsi / 2.0);
        let corners = [(r0, a0), (r1, a0), (r1, a1), (r0, a1)].map(|(r, a)| xy(&PolarPoint::new(r, a)));
        let pts: Vec<String> = corners.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let c = &colors[&p.label];
        // a same-colour outline closes the anti-aliasing seams between sectors
        writeln!(w, r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.6"/>"#, pts.join(" "))?;
    }
    writeln!(w, "</g>")?;

    writeln!(w, r#"<g fill="none" stroke="black" stroke-width="1">"#)?;
    for b in &part.borders {
        let pts: Vec<String> = b
            .points
            .iter()
            .filter(|v| v.rho >= window.rho_min && v.rho <= window.rho_max)
            .map(|v| {
                let (x, y) = xy(v);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        if pts.len() >= 2 {
            writeln!(w, r#"<polyline data-border="{}" points="{}"/>"#, b.name, pts.join(" "))?;
        }
    }
    writeln!(w, "</g>")?;

    let (lx, ly) = xy(&PolarPoint::origin());
    writeln!(w, r#"<circle cx="{lx:.2}" cy="{ly:.2}" r="3" fill="black"/>"#)?;
    let (px, py) = xy(&s.goal());
    writeln!(w, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="red"/>"#)?;

    writeln!(w, r#"<g font-family="monospace" font-size="13">"#)?;
    writeln!(
        w,
        r#"<text x="10" y="{:.0}">{} gamma={:.6} delta={:.6} rho_P={}</text>"#,
        SIZE + 16.0,
        s.geom.case,
        s.geom.gamma,
        s.geom.delta,
        s.rho_p
    )?;
    for (k, (label, color)) in colors.iter().enumerate() {
        let y = SIZE + 36.0 + 20.0 * k as f64;
        writeln!(w, r#"<rect x="10" y="{:.0}" width="14" height="14" fill="{color}" stroke="black"/>"#, y - 12.0)?;
        writeln!(w, r#"<text x="30" y="{y:.0}">{label}  {}</text>"#, caller_word(s, label))?;
    }
    writeln!(w, "</g>")?;
    writeln!(w, "</svg>")
}
