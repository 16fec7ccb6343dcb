use super::cost::{planning_ops, FrameLedger};
use super::gop::FrameType;
use super::plane::Plane;
use super::recon::{edge_info, finish_deblock, intra_decode, inter_reconstruct};
use super::sequence::ProxySequence;
use crate::error::{Error, Result};
use crate::types::ControlPlan;

/// Decoded pictures and their cost ledgers, both indexed by POC.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub frames: Vec<Plane>,
    pub ledgers: Vec<FrameLedger>,
}

/// Decodes with one optional plan per POC.
pub fn decode_sequence(seq: &ProxySequence, plans: Option<&[ControlPlan]>) -> Result<Decoded> {
    if let Some(p) = plans {
        if p.len() != seq.len() {
            return Err(Error::validation(format!(
                "{} plans for {} frames",
                p.len(),
                seq.len()
            )));
        }
    }
    decode_with(seq, |poc| plans.map(|p| &p[poc]))
}

/// Decodes with a per-POC plan lookup; `None` decodes the frame unmodified.
pub fn decode_with<'a>(
    seq: &ProxySequence,
    plan_for: impl Fn(usize) -> Option<&'a ControlPlan>,
) -> Result<Decoded> {
    let n = seq.layout.num_ctus();
    let mut frames: Vec<Option<Plane>> = vec![None; seq.len()];
    let mut ledgers = vec![FrameLedger::default(); seq.len()];
    for &poc in seq.gop.decode_order() {
        let plan = plan_for(poc);
        if let Some(p) = plan {
            p.validate_shape(n)?;
        }
        let refs: Vec<&Plane> = seq.frames[poc]
            .refs
            .iter()
            .map(|&r| frames[r].as_ref().expect("references decode first"))
            .collect();
        let (pic, ledger) = decode_frame(seq, poc, &refs, plan)?;
        frames[poc] = Some(pic);
        ledgers[poc] = ledger;
    }
    Ok(Decoded {
        frames: frames.into_iter().map(|f| f.expect("every POC decoded")).collect(),
        ledgers,
    })
}

/// Decodes one picture from already decoded references. Skip levels are
/// ignored on intra pictures; deblocking flags are honoured everywhere.
pub fn decode_frame(
    seq: &ProxySequence,
    poc: usize,
    refs: &[&Plane],
    plan: Option<&ControlPlan>,
) -> Result<(Plane, FrameLedger)> {
    let fr = &seq.frames[poc];
    let layout = &seq.layout;
    if refs.len() != fr.refs.len() {
        return Err(Error::validation(format!(
            "frame {poc} needs {} references, got {}",
            fr.refs.len(),
            refs.len()
        )));
    }
    let f = plan.map(|p| p.f.as_slice());
    let (pic, ctus) = match fr.frame_type {
        FrameType::I => {
            let (mut pic, mut costs) = intra_decode(layout, &fr.levels, fr.qp);
            let ei = edge_info(layout, seq.block_size, fr.qp, true, &fr.levels, &[]);
            finish_deblock(layout, &mut pic, &ei, f, &mut costs);
            (pic, costs)
        }
        FrameType::B => inter_reconstruct(
            layout,
            seq.block_size,
            refs,
            &fr.motion,
            &fr.levels,
            fr.qp,
            f,
            plan.map(|p| p.g.as_slice()),
        ),
    };
    let planning = match plan {
        Some(p) if !p.is_identity() => planning_ops(layout.num_ctus()),
        _ => 0,
    };
    Ok((pic, FrameLedger { ctus, planning }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::container::{from_bytes, to_bytes};
    use crate::codec::cost::CostProfile;
    use crate::codec::interp::Mv;
    use crate::codec::encoder::{encode_sequence, EncoderConfig};
    use crate::codec::synth::{generate_clip, ClipKind};
    use crate::types::FrameLayout;

    fn encode(kind: ClipKind, frames: usize) -> ProxySequence {
        let layout = FrameLayout::new(128, 64, 32).unwrap();
        let clip = generate_clip(kind, &layout, frames, 5).unwrap();
        let cfg = EncoderConfig {
            ctu_size: 32,
            ..EncoderConfig::with_qp(32)
        };
        encode_sequence(&clip.frames, &cfg).unwrap()
    }

    #[test]
    fn static_gray_has_no_motion_or_residual() {
        let seq = encode(ClipKind::Static, 9);
        for f in seq.frames.iter().filter(|f| f.frame_type == FrameType::B) {
            assert!(f.motion.iter().all(|m| m.mv.iter().all(|v| *v == Mv::ZERO)));
            assert!(f.levels.iter().all(|&l| l == 0));
        }
    }

    #[test]
    fn single_frame_is_one_intra_picture() {
        let seq = encode(ClipKind::Texture, 1);
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.frames[0].frame_type, FrameType::I);
        let d = decode_sequence(&seq, None).unwrap();
        assert_eq!(d.frames.len(), 1);
    }

    #[test]
    fn intra_period_inserts_i_frames() {
        let seq = encode(ClipKind::Static, 33);
        let intra: Vec<usize> = (0..33).filter(|&p| seq.is_intra(p)).collect();
        assert_eq!(intra, vec![0, 32]);
    }

    #[test]
    fn zero_plan_is_bit_identical() {
        let seq = encode(ClipKind::Texture, 9);
        let n = seq.layout.num_ctus();
        let reference = decode_sequence(&seq, None).unwrap();
        let plans = vec![ControlPlan::identity(n); seq.len()];
        let planned = decode_sequence(&seq, Some(&plans)).unwrap();
        assert_eq!(reference, planned);
    }

    #[test]
    fn i_frames_ignore_skip_levels() {
        let seq = encode(ClipKind::Texture, 9);
        let n = seq.layout.num_ctus();
        let reference = decode_sequence(&seq, None).unwrap();
        let mut plans = vec![ControlPlan::identity(n); seq.len()];
        plans[0] = ControlPlan::uniform(n, 0, 3);
        let planned = decode_sequence(&seq, Some(&plans)).unwrap();
        assert_eq!(planned.frames, reference.frames);
    }

    #[test]
    fn skipping_lowers_cost_and_changes_pictures() {
        let seq = encode(ClipKind::Texture, 9);
        let n = seq.layout.num_ctus();
        let p = CostProfile::default();
        let reference = decode_sequence(&seq, None).unwrap();
        let plans = vec![ControlPlan::uniform(n, 1, 3); seq.len()];
        let planned = decode_sequence(&seq, Some(&plans)).unwrap();
        let b = (0..seq.len()).find(|&k| !seq.is_intra(k)).unwrap();
        assert!(planned.ledgers[b].cost(&p) < reference.ledgers[b].cost(&p));
        assert_ne!(planned.frames[b], reference.frames[b]);
    }

    #[test]
    fn deterministic_and_container_round_trip() {
        let a = encode(ClipKind::Gradient, 9);
        let b = encode(ClipKind::Gradient, 9);
        assert_eq!(to_bytes(&a), to_bytes(&b));
        let back = from_bytes(&to_bytes(&a)).unwrap();
        assert_eq!(back, a);
        assert_eq!(decode_sequence(&back, None).unwrap(), decode_sequence(&a, None).unwrap());
    }

    #[test]
    fn rejects_wrong_plan_count() {
        let seq = encode(ClipKind::Static, 3);
        let plans = vec![ControlPlan::identity(seq.layout.num_ctus()); 2];
        assert!(decode_sequence(&seq, Some(&plans)).is_err());
    }
}
