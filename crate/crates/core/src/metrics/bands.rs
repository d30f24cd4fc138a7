/// Centre frequency and bandwidth (Hz) of the 25 critical bands.
pub const CRITICAL_BANDS: [(f64, f64); 25] = [
    (50.0, 70.0),
    (120.0, 70.0),
    (190.0, 70.0),
    (260.0, 70.0),
    (330.0, 70.0),
    (400.0, 70.0),
    (470.0, 70.0),
    (540.0, 77.3724),
    (617.372, 86.0056),
    (703.378, 95.3398),
    (798.717, 105.689),
    (904.406, 117.146),
    (1021.54, 129.82),
    (1151.36, 143.895),
    (1295.26, 159.51),
    (1454.77, 176.806),
    (1631.57, 195.971),
    (1827.54, 217.19),
    (2044.73, 240.75),
    (2285.48, 266.83),
    (2552.32, 295.78),
    (2848.1, 327.83),
    (3175.93, 363.4),
    (3539.33, 402.79),
    (3942.12, 446.48),
];

/// Gaussian-shaped magnitude weights for each critical band over the first
/// `nfft / 2` bins. Wider bands are attenuated by the ratio of the narrowest
/// bandwidth and each response is cut below -30 dB.
pub fn critical_band_filters(nfft: usize, fs: f64) -> Vec<Vec<f64>> {
    let half = nfft / 2;
    let nyquist = fs / 2.0;
    let bw_min = CRITICAL_BANDS[0].1;
    let min_factor = (-30.0 / (2.0 * 2.303f64)).exp();
    CRITICAL_BANDS
        .iter()
        .map(|&(centre, width)| {
            let c = (centre / nyquist * half as f64).floor();
            let bw = width / nyquist * half as f64;
            let norm = bw_min.ln() - width.ln();
            (0..half)
                .map(|j| {
                    let d = j as f64 - c;
                    let v = (-11.0 * d * d / (bw * bw) + norm).exp();
                    if v > min_factor {
                        v
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
