use ndarray::s;

use vrp_policy::PolicyParams;

use crate::error::TrainError;

/// Adapts a pre-trained routing policy for single-tour decoding.
///
/// The customer-feature embedding is removed from the architecture (every
/// node then flows through the coordinate embedding) and the decoder query
/// drops its four dynamic-feature inputs. All retained tensors are carried
/// over bit for bit; the edge embedding and attention layers are untouched.
pub fn adapt_for_tsp(pretrained: &PolicyParams) -> Result<PolicyParams, TrainError> {
    if !pretrained.config.customer_features {
        return Err(TrainError::Incompatible(
            "checkpoint is already adapted for single-tour decoding".into(),
        ));
    }
    if pretrained.customer_embed.is_none() {
        return Err(TrainError::Incompatible(
            "checkpoint is missing its customer embedding tensors".into(),
        ));
    }
    let mut adapted = pretrained.clone();
    adapted.customer_embed = None;
    adapted.config.customer_features = false;
    adapted.trained_on = vrp_core::VariantFlags::tsp();
    let h = adapted.config.h_x;
    // The dynamic features occupy the trailing query columns.
    adapted.decoder.w_q = pretrained.decoder.w_q.slice(s![.., 0..h]).to_owned();
    Ok(adapted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vrp_core::VariantFlags;
    use vrp_policy::{PolicyConfig, PolicyParams};

    #[test]
    fn adaptation_drops_customer_tensors_and_keeps_the_rest() {
        let params = PolicyParams::init(PolicyConfig::desk(), VariantFlags::mdvrp(), 11);
        let adapted = adapt_for_tsp(&params).unwrap();
        assert!(adapted
            .trainable_tensors()
            .iter()
            .all(|(name, _)| !name.starts_with("customer_embed")));
        assert_eq!(adapted.depot_embed, params.depot_embed);
        assert_eq!(adapted.edge_embed, params.edge_embed);
        assert_eq!(adapted.layers, params.layers);
        assert_eq!(adapted.decoder.w_v, params.decoder.w_v);
        assert_eq!(adapted.decoder.w_k, params.decoder.w_k);
        assert_eq!(adapted.decoder.w_out, params.decoder.w_out);
        let h = params.config.h_x;
        assert_eq!(adapted.decoder.w_q.ncols(), h);
        for r in 0..h {
            for c in 0..h {
                assert_eq!(adapted.decoder.w_q[[r, c]], params.decoder.w_q[[r, c]]);
            }
        }
        assert!(adapt_for_tsp(&adapted).is_err());
    }
}
