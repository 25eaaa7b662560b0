//! Reproduction dataset for the worked example `P_c(x) = 2 (x - 2/3)^2`
//! with `U(0) = 0`: profiles, inviscid limits, matched layers, streamline
//! plots and a checksummed manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::eulerlim::{euler_profile, Sign};
use crate::field::{auto_levels, profile_from_euler, streamlines, Bbox, StreamlineSet};
use crate::layers::{matched_csv, LayerSpec};
use crate::polyparams::Coeffs;
use crate::profile::{Branch, SolutionProfile};
use crate::riccati::{default_grid, Solver};

/// `c = (25/9, 1/9, -2)`, i.e. `P_c = 2 (x - 2/3)^2`.
pub fn example_coeffs() -> Coeffs {
    Coeffs::new(25.0 / 9.0, 1.0 / 9.0, -2.0)
}

pub const EXAMPLE_XK: f64 = 0.0;

/// Viscosities of the example, with file-name labels.
pub const EXAMPLE_NUS: [(f64, &str); 4] = [
    (1.0, "1"),
    (1.0 / 8.0, "1_8"),
    (1.0 / 20.0, "1_20"),
    (1.0 / 50.0, "1_50"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub c: Coeffs,
    pub x_k: f64,
    pub nus: Vec<f64>,
    pub files: Vec<ManifestEntry>,
}

/// Minimal SVG line plot. Each series is `(label, colour, points)`.
pub fn svg_plot(
    title: &str,
    series: &[(&str, &str, Vec<(f64, f64)>)],
    xr: (f64, f64),
    yr: (f64, f64),
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 40.0;
    let sx = |x: f64| M + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<title>{title}</title>"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // axes through the origin when visible, else along the frame
    let ax = if xr.0 <= 0.0 && xr.1 >= 0.0 {
        sx(0.0)
    } else {
        M
    };
    let ay = if yr.0 <= 0.0 && yr.1 >= 0.0 {
        sy(0.0)
    } else {
        H - M
    };
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{ay:.2}" x2="{:.2}" y2="{ay:.2}" stroke="black" stroke-width="1"/>"#,
        W - M
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ax:.2}" y1="{M}" x2="{ax:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        H - M
    );
    for (k, (label, colour, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
            coords.join(" ")
        );
        if !label.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{:.0}" y="{:.0}" font-size="12" fill="{colour}">{label}</text>"#,
                W - M - 120.0,
                M + 14.0 * k as f64
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// SVG of a streamline set in the meridian plane.
pub fn streamlines_svg(title: &str, set: &StreamlineSet, bbox: &Bbox) -> String {
    let series: Vec<(&str, &str, Vec<(f64, f64)>)> = set
        .polylines
        .iter()
        .flatten()
        .map(|line| ("", "steelblue", line.clone()))
        .collect();
    svg_plot(
        title,
        &series,
        (bbox.x1_min, bbox.x1_max),
        (bbox.x3_min, bbox.x3_max),
    )
}

const COLOURS: [&str; 4] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a"];

fn meridian_bbox() -> Bbox {
    Bbox::new(0.02, 1.0, -1.0, 1.0).unwrap()
}

fn profile_streamlines(p: &SolutionProfile) -> Result<StreamlineSet> {
    let bbox = meridian_bbox();
    let mut levels = auto_levels(p, &bbox, 14);
    levels.push(0.0);
    streamlines(p, &levels, &bbox)
}

/// Solve the four interior profiles of the example.
pub fn example_profiles(solver: &Solver) -> Result<Vec<SolutionProfile>> {
    let c = example_coeffs();
    let grid = default_grid();
    EXAMPLE_NUS
        .iter()
        .map(|&(nu, _)| solver.solve_interior(nu, &c, EXAMPLE_XK, &grid))
        .collect()
}

/// Write the dataset into `out_dir` and return its manifest (also written
/// as `manifest.json`).
pub fn fig1_dataset(out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    let c = example_coeffs();
    let grid = default_grid();
    let profiles = example_profiles(&Solver::default())?;
    let mut files: Vec<(String, String)> = Vec::new();

    for (p, &(_, label)) in profiles.iter().zip(&EXAMPLE_NUS) {
        files.push((format!("profile_nu_{label}.csv"), p.to_csv()));
        let spec = LayerSpec::new(p.nu, c, EXAMPLE_XK, None)?;
        files.push((
            format!("matched_nu_{label}.csv"),
            matched_csv(&spec, &grid)?,
        ));
    }
    let euler = [
        ("plus", Sign::Plus),
        ("minus", Sign::Minus),
        ("glued_0", Sign::GluedAt(EXAMPLE_XK)),
    ];
    for (name, sign) in euler {
        files.push((
            format!("euler_{name}.csv"),
            euler_profile(&c, sign, &grid)?.to_csv(),
        ));
    }

    // the profiles against the glued limit
    let mut series: Vec<(&str, &str, Vec<(f64, f64)>)> = profiles
        .iter()
        .zip(&EXAMPLE_NUS)
        .zip(COLOURS)
        .map(|((p, &(_, label)), colour)| {
            let pts = p
                .grid
                .iter()
                .copied()
                .zip(p.values.iter().copied())
                .collect();
            (label, colour, pts)
        })
        .collect();
    let glued = euler_profile(&c, Sign::GluedAt(EXAMPLE_XK), &grid)?;
    let left: Vec<(f64, f64)> = glued
        .grid
        .iter()
        .zip(&glued.values)
        .filter(|(&x, _)| x < EXAMPLE_XK)
        .map(|(&x, &v)| (x, v))
        .collect();
    let right: Vec<(f64, f64)> = glued
        .grid
        .iter()
        .zip(&glued.values)
        .filter(|(&x, _)| x >= EXAMPLE_XK)
        .map(|(&x, &v)| (x, v))
        .collect();
    series.push(("limit", "black", left));
    series.push(("", "black", right));
    files.push((
        "fig1.svg".into(),
        svg_plot(
            "U(x) for nu = 1, 1/8, 1/20, 1/50",
            &series,
            (-1.0, 1.0),
            (-3.0, 3.0),
        ),
    ));

    let bbox = meridian_bbox();
    for (p, &(_, label)) in profiles.iter().zip(&EXAMPLE_NUS) {
        let set = profile_streamlines(p)?;
        files.push((
            format!("fig2_nu_{label}.svg"),
            streamlines_svg(&format!("streamlines, nu = {label}"), &set, &bbox),
        ));
    }
    // inviscid limits and the smooth Euler solutions V = ±2 (x - 2/3)
    for (name, sign) in [("plus", Sign::Plus), ("minus", Sign::Minus)] {
        let e = profile_from_euler(&c, sign, &grid)?;
        let set = profile_streamlines(&e)?;
        files.push((
            format!("fig3_{name}.svg"),
            streamlines_svg(&format!("streamlines, V = {name} sqrt(2 P_c)"), &set, &bbox),
        ));
        let s = if name == "plus" { 1.0 } else { -1.0 };
        let smooth = SolutionProfile::from_samples(
            0.0,
            c,
            Branch::External,
            grid.clone(),
            grid.iter().map(|&x| s * 2.0 * (x - 2.0 / 3.0)).collect(),
            vec![2.0 * s; grid.len()],
        )?;
        let set = profile_streamlines(&smooth)?;
        files.push((
            format!("fig4_{name}.svg"),
            streamlines_svg(&format!("streamlines, V = {name} 2 (x - 2/3)"), &set, &bbox),
        ));
    }

    let mut entries = Vec::with_capacity(files.len());
    for (name, body) in &files {
        fs::write(out_dir.join(name), body)?;
        entries.push(ManifestEntry {
            file: name.clone(),
            bytes: body.len(),
            sha256: hex(&Sha256::digest(body.as_bytes())),
        });
    }
    let manifest = Manifest {
        c,
        x_k: EXAMPLE_XK,
        nus: EXAMPLE_NUS.iter().map(|&(nu, _)| nu).collect(),
        files: entries,
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed() {
        let s = svg_plot(
            "t",
            &[("a", "red", vec![(0.0, 0.0), (1.0, 1.0)])],
            (0.0, 1.0),
            (0.0, 1.0),
        );
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn hex_digest() {
        assert_eq!(
            hex(&Sha256::digest(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
