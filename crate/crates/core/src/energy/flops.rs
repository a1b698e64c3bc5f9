/// Effective kernel extent `D (K - 1) + 1`.
pub fn effective_kernel(k: usize, dilation: usize) -> usize {
    dilation * (k - 1) + 1
}

/// Dense convolution: `K_eff² C_in H W C_out`.
pub fn flops_conv2d(k: usize, dilation: usize, c_in: usize, h_out: usize, w_out: usize, c_out: usize) -> u64 {
    let ke = effective_kernel(k, dilation) as u64;
    ke * ke * (c_in * h_out * w_out * c_out) as u64
}

/// Depthwise-separable convolution: `D_m H W C_in (K_eff² + C_out)`.
pub fn flops_dsconv2d(
    k: usize,
    dilation: usize,
    depth_multiplier: usize,
    c_in: usize,
    h_out: usize,
    w_out: usize,
    c_out: usize,
) -> u64 {
    let ke = effective_kernel(k, dilation) as u64;
    (depth_multiplier * h_out * w_out * c_in) as u64 * (ke * ke + c_out as u64)
}

/// Normalization: `C H W`.
pub fn flops_norm(c_in: usize, h_out: usize, w_out: usize) -> u64 {
    (c_in * h_out * w_out) as u64
}

/// Event-driven count of a layer fed by spikes at rate `r_s`.
pub fn snn_flops(dense: f64, r_s: f64) -> f64 {
    dense * r_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_counts() {
        assert_eq!(flops_conv2d(3, 1, 2, 4, 4, 8), 2304);
        assert_eq!(flops_conv2d(1, 1, 2, 4, 4, 8), 2 * 16 * 8);
        assert_eq!(flops_conv2d(3, 2, 2, 4, 4, 8), 25 * 2 * 16 * 8);
        assert_eq!(flops_dsconv2d(3, 1, 1, 2, 4, 4, 8), 544);
        assert_eq!(flops_dsconv2d(3, 1, 1, 2, 4, 4, 0), 16 * 2 * 9);
        assert_eq!(flops_norm(2, 4, 4), 32);
        assert_eq!(flops_norm(1, 1, 1), 1);
        assert_eq!(snn_flops(2304.0, 0.0), 0.0);
        assert_eq!(snn_flops(2304.0, 1.0), 2304.0);
        assert!((snn_flops(2304.0, 0.3) - 691.2).abs() < 1e-9);
    }

    #[test]
    fn separable_to_dense_ratio() {
        let dense = flops_conv2d(3, 1, 32, 14, 64, 32) as f64;
        let ds = flops_dsconv2d(3, 1, 1, 32, 14, 64, 32) as f64;
        assert!((ds / dense - (9.0 + 32.0) / (9.0 * 32.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn multiplicative(k in 0usize..3, c in 1usize..9, h in 1usize..9, w in 1usize..9, o in 1usize..9) {
            let k = 2 * k + 1;
            let base = flops_conv2d(k, 1, c, h, w, o);
            prop_assert_eq!(flops_conv2d(k, 1, 2 * c, h, w, o), 2 * base);
            prop_assert_eq!(flops_conv2d(k, 1, c, 3 * h, w, o), 3 * base);
            prop_assert_eq!(flops_conv2d(k, 1, c, h, w, 5 * o), 5 * base);
            prop_assert_eq!(flops_norm(2 * c, h, 3 * w), 6 * flops_norm(c, h, w));
        }
    }
}
