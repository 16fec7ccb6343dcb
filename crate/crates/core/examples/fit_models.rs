//! Fits the complexity and distortion models on synthetic clips run through
//! the proxy codec.

use sgcc::codec::{encode_sequence, generate_clip, ClipKind, CostProfile, EncoderConfig};
use sgcc::eval::df_rank_fidelity;
use sgcc::pipeline::{fit_params, TrainingClip};
use sgcc::FrameLayout;

fn main() -> sgcc::Result<()> {
    let layout = FrameLayout::new(416, 240, 64)?;
    let clips = [(ClipKind::Gradient, 11), (ClipKind::Texture, 12)]
        .into_iter()
        .map(|(kind, seed)| {
            let c = generate_clip(kind, &layout, 17, seed)?;
            Ok(TrainingClip {
                name: kind.name().into(),
                frames: c.frames,
                saliency: c.saliency,
            })
        })
        .collect::<sgcc::Result<Vec<_>>>()?;

    let (params, report) = fit_params(&clips, &EncoderConfig::default(), &CostProfile::default())?;
    println!("QP   DF a     DF b     r2     MC c     r2");
    for b in &report.buckets {
        println!(
            "{:2}  {:7.4}  {:7.4}  {:5.3}  {:7.4}  {:5.3}",
            b.qp, b.df.a, b.df.b, b.df.r_square, b.mc.c, b.mc.r_square
        );
    }
    let h = report.cubic.h;
    println!(
        "MSE ratio cubic h = [{:.4}, {:.4}, {:.4}], r2 {:.4} over {} samples",
        h[0], h[1], h[2], report.cubic.r_square, report.mse_samples
    );

    let probe = generate_clip(ClipKind::Texture, &layout, 9, 13)?;
    let seq = encode_sequence(&probe.frames, &EncoderConfig::default())?;
    let srcc = df_rank_fidelity(&seq, &probe.saliency)?;
    println!(
        "rank fidelity of w*f against measured deblocking loss: mean SRCC {:.3} over {} frames",
        srcc.iter().sum::<f64>() / srcc.len() as f64,
        srcc.len()
    );
    println!("{}", params.to_json()?);
    Ok(())
}
