//! Region JSON and SVG output.
//!
//! JSON layout: `{"components":[{"outer":[[x,y],...],"holes":[[[x,y],...],...]}]}`.
//! Rings are listed without repeating the first vertex; a trailing copy of
//! the first vertex is tolerated and dropped. Orientation is normalized on
//! read (outer counterclockwise, holes clockwise).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ring, Component, Region, Vec2};
use crate::error::Result;

#[derive(Debug, Serialize, Deserialize)]
struct ComponentJson {
    outer: Vec<[f64; 2]>,
    #[serde(default)]
    holes: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegionJson {
    components: Vec<ComponentJson>,
}

fn to_ring(pts: &[[f64; 2]]) -> Vec<Vec2> {
    let mut r: Vec<Vec2> = pts.iter().map(|&p| p.into()).collect();
    if r.len() > 1 && r.first() == r.last() {
        r.pop();
    }
    r
}

/// Parses and validates a region; errors name the offending ring.
pub fn region_from_json(text: &str) -> Result<Region> {
    let raw: RegionJson = serde_json::from_str(text)?;
    let mut comps = Vec::with_capacity(raw.components.len());
    for c in &raw.components {
        let mut outer = to_ring(&c.outer);
        if ring::signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        let holes = c
            .holes
            .iter()
            .map(|h| {
                let mut h = to_ring(h);
                if ring::signed_area(&h) > 0.0 {
                    h.reverse();
                }
                h
            })
            .collect();
        comps.push(Component::with_holes(outer, holes));
    }
    Region::new(comps)
}

pub fn region_to_json(region: &Region) -> String {
    let raw = RegionJson {
        components: region
            .components
            .iter()
            .map(|c| ComponentJson {
                outer: c.outer.iter().map(|&p| p.into()).collect(),
                holes: c.holes.iter().map(|h| h.iter().map(|&p| p.into()).collect()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("region serializes")
}

pub fn read_region(path: impl AsRef<Path>) -> Result<Region> {
    region_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_region(path: impl AsRef<Path>, region: &Region) -> Result<()> {
    std::fs::write(path, region_to_json(region))?;
    Ok(())
}

/// Renders regions as filled paths (even-odd rule) in one SVG document.
pub fn regions_to_svg(regions: &[&Region], size_px: f64) -> String {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in regions {
        let (l, h) = r.bbox();
        lo = Vec2::new(lo.x.min(l.x), lo.y.min(l.y));
        hi = Vec2::new(hi.x.max(h.x), hi.y.max(h.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
    let pad = 0.05 * span;
    let scale = size_px / (span + 2.0 * pad);
    let map = |p: Vec2| ((p.x - lo.x + pad) * scale, (hi.y - p.y + pad) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0:.0}" height="{0:.0}" viewBox="0 0 {0:.0} {0:.0}">"#,
        size_px
    );
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, r) in regions.iter().enumerate() {
        let mut d = String::new();
        for (_, _, ring) in r.rings() {
            for (k, &p) in ring.iter().enumerate() {
                let (x, y) = map(p);
                let _ = write!(d, "{}{:.3},{:.3} ", if k == 0 { "M" } else { "L" }, x, y);
            }
            d.push_str("Z ");
        }
        let color = palette[i % palette.len()];
        let _ = writeln!(
            s,
            r#"  <path d="{}" fill="{}" fill-opacity="0.35" stroke="{}" stroke-width="1" fill-rule="evenodd"/>"#,
            d.trim_end(),
            color,
            color
        );
    }
    s.push_str("</svg>\n");
    s
}
