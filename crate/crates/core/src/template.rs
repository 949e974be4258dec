//! Canonical 68-point face layout in pixel coordinates.
//!
//! Index ranges follow the usual 68-landmark annotation: jaw line, brows,
//! nose bridge and base, eyes, outer and inner lips. The face is roughly
//! 190 px wide and centred on `(128, 128)`, image `y` pointing down.

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::Array2;

pub const JAW: Range<usize> = 0..17;
pub const RIGHT_BROW: Range<usize> = 17..22;
pub const LEFT_BROW: Range<usize> = 22..27;
pub const NOSE_BRIDGE: Range<usize> = 27..31;
pub const NOSE_BASE: Range<usize> = 31..36;
pub const RIGHT_EYE: Range<usize> = 36..42;
pub const LEFT_EYE: Range<usize> = 42..48;
pub const MOUTH: Range<usize> = 48..68;

pub const CENTER: (f64, f64) = (128.0, 128.0);

fn ellipse(out: &mut Vec<[f64; 2]>, cx: f64, cy: f64, rx: f64, ry: f64, n: usize) {
    for i in 0..n {
        let t = PI - 2.0 * PI * i as f64 / n as f64;
        out.push([cx + rx * t.cos(), cy - ry * t.sin()]);
    }
}

/// Landmark offsets from the face centre.
pub fn canonical_offsets() -> Vec<[f64; 2]> {
    let mut p = Vec::with_capacity(68);
    for i in 0..17 {
        let t = PI - PI * i as f64 / 16.0;
        p.push([95.0 * t.cos(), -10.0 + 120.0 * t.sin()]);
    }
    for side in [-1.0, 1.0] {
        for i in 0..5 {
            let u = i as f64 / 4.0;
            let x = if side < 0.0 { -78.0 + 56.0 * u } else { 22.0 + 56.0 * u };
            p.push([x, -58.0 - 14.0 * (PI * u).sin()]);
        }
    }
    for i in 0..4 {
        p.push([0.0, -42.0 + 15.0 * i as f64]);
    }
    for (x, y) in [(-20.0, 18.0), (-10.0, 22.0), (0.0, 24.0), (10.0, 22.0), (20.0, 18.0)] {
        p.push([x, y]);
    }
    ellipse(&mut p, -45.0, -32.0, 16.0, 7.0, 6);
    ellipse(&mut p, 45.0, -32.0, 16.0, 7.0, 6);
    ellipse(&mut p, 0.0, 60.0, 36.0, 12.0, 12);
    ellipse(&mut p, 0.0, 60.0, 22.0, 7.0, 8);
    p
}

/// The 68 landmarks as a `68 x 2` pixel-coordinate matrix.
pub fn canonical_68() -> Array2<f64> {
    let offs = canonical_offsets();
    Array2::from_shape_fn((offs.len(), 2), |(i, d)| {
        offs[i][d] + if d == 0 { CENTER.0 } else { CENTER.1 }
    })
}
