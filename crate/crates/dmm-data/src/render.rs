//! Trajectory rendering: integer positions, one active sub-action at a
//! time, elastic reflection at the canvas borders.

use crate::config::SubAction;
use crate::glyph::DigitGlyph;

/// Unit velocity vector (dy, dx) of a sub-action given its drawn
/// direction signs.
pub fn velocity(action: SubAction, sign_y: i8, sign_x: i8) -> (i64, i64) {
    match action {
        SubAction::Vertical => (sign_y as i64, 0),
        SubAction::Horizontal => (0, sign_x as i64),
        SubAction::Diagonal => (sign_y as i64, sign_x as i64),
    }
}

/// One elastic-reflection step along a single axis: advance `pos` by
/// `vel`, folding back into [0, max] and flipping the velocity sign on
/// each bounce.
fn step_axis(pos: i64, vel: &mut i64, max: i64) -> i64 {
    if max == 0 {
        // no room to move; velocity still reverses at the wall
        if *vel != 0 {
            *vel = -*vel;
        }
        return 0;
    }
    let mut p = pos + *vel;
    loop {
        if p < 0 {
            p = -p;
            *vel = -*vel;
        } else if p > max {
            p = 2 * max - p;
            *vel = -*vel;
        } else {
            return p;
        }
    }
}

/// Renders a 2d-frame clip: the glyph starts at `start` (top-left, in
/// pixels), plays `actions[0]` for d frames then `actions[1]` for d
/// frames, moving `speed` pixels per frame with elastic reflection.
/// `signs` are the per-sub-action direction signs (sign_y, sign_x).
///
/// The frame is drawn first, then the position advances, so frame 0
/// shows the start position. Returns row-major (T, H, W) bytes.
pub fn render_trajectory(
    glyph: &DigitGlyph,
    start: (usize, usize),
    actions: [SubAction; 2],
    signs: [(i8, i8); 2],
    speed: usize,
    d: usize,
    canvas: (usize, usize),
) -> Vec<u8> {
    let (ch, cw) = canvas;
    debug_assert!(glyph.h <= ch && glyph.w <= cw);
    let (max_y, max_x) = ((ch - glyph.h) as i64, (cw - glyph.w) as i64);
    let (mut y, mut x) = (start.0 as i64, start.1 as i64);
    let t_total = 2 * d;
    let mut frames = vec![0u8; t_total * ch * cw];
    for (seg, (&action, &(sy, sx))) in actions.iter().zip(&signs).enumerate() {
        let (uy, ux) = velocity(action, sy, sx);
        let mut vy = uy * speed as i64;
        let mut vx = ux * speed as i64;
        for f in 0..d {
            let t = seg * d + f;
            let frame = &mut frames[t * ch * cw..(t + 1) * ch * cw];
            for gy in 0..glyph.h {
                let row = (y as usize + gy) * cw + x as usize;
                frame[row..row + glyph.w]
                    .copy_from_slice(&glyph.pixels[gy * glyph.w..(gy + 1) * glyph.w]);
            }
            y = step_axis(y, &mut vy, max_y);
            x = step_axis(x, &mut vx, max_x);
        }
    }
    frames
}
