//! Encodes a synthetic clip, stores it in the container format and decodes it
//! with and without decode-time simplification.

use sgcc::codec::{
    decode_sequence, encode_sequence, generate_clip, read_sequence, write_sequence, ClipKind, CostProfile,
    EncoderConfig,
};
use sgcc::eval::{measure_mar, psnr};
use sgcc::{ControlPlan, FrameLayout};

fn main() -> sgcc::Result<()> {
    let layout = FrameLayout::new(416, 240, 64)?;
    let clip = generate_clip(ClipKind::Texture, &layout, 17, 7)?;
    let seq = encode_sequence(&clip.frames, &EncoderConfig::with_qp(32))?;

    let dir = std::env::temp_dir().join("sgcc_proxy_decode");
    let path = dir.join("texture.pseq");
    write_sequence(&path, &seq)?;
    let seq = read_sequence(&path)?;
    println!("{} frames, {} bytes on disk", seq.len(), std::fs::metadata(&path)?.len());

    let profile = CostProfile::default();
    let reference = decode_sequence(&seq, None)?;
    println!("reference PSNR {:.2} dB", psnr(&clip.frames, &reference.frames)?.mean);

    println!("POC type  MC%   DF%   cost");
    for (poc, ledger) in reference.ledgers.iter().enumerate() {
        let t = ledger.totals();
        let cost = ledger.cost(&profile);
        println!(
            "{poc:3}  {:?}  {:4.1}  {:4.1}  {cost:.0}",
            seq.frames[poc].frame_type,
            100.0 * t.mc as f64 * profile.mc / cost,
            100.0 * t.df as f64 * profile.df / cost,
        );
    }

    let n = layout.num_ctus();
    for (f, g) in [(1, 0), (0, 3), (1, 3)] {
        let plans = vec![ControlPlan::uniform(n, f, g); seq.len()];
        let planned = decode_sequence(&seq, Some(&plans))?;
        let before: f64 = reference.ledgers.iter().map(|l| l.cost(&profile)).sum();
        let after: f64 = planned.ledgers.iter().map(|l| l.cost(&profile)).sum();
        println!(
            "f={f} g={g}: reduction {:.1}%, PSNR {:.2} dB",
            100.0 * (1.0 - after / before),
            psnr(&clip.frames, &planned.frames)?.mean
        );
    }
    println!("maximal achievable reduction {:.1}%", 100.0 * measure_mar(&seq, &profile)?);
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
