use crate::config::SubcarrierPlan;
use crate::C64;

/// Pilot-based SNR estimates are capped here.
pub const SNR_CAP_DB: f64 = 60.0;
/// Subcarriers whose estimate is below this fraction of the RMS estimate
/// magnitude are erased.
const ERASURE_FLOOR: f64 = 1e-3;

/// One zero-forced OFDM symbol with common phase removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    /// Data subcarriers in plan order; erased entries are zero.
    pub data: Vec<C64>,
    pub erased: Vec<bool>,
    /// Equalized pilots in plan order.
    pub pilots: Vec<C64>,
    /// Common phase error that was removed, radians.
    pub cpe: f64,
}

/// Running pilot power and pilot error power.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PilotStats {
    pub signal: f64,
    pub error: f64,
    pub count: usize,
}

impl PilotStats {
    pub fn add(&mut self, eq: &Equalized, known: &[C64]) {
        for (p, k) in eq.pilots.iter().zip(known) {
            self.signal += p.norm_sqr();
            self.error += (p - k).norm_sqr();
            self.count += 1;
        }
    }

    pub fn snr_db(&self) -> f64 {
        estimate_snr(self.signal, self.error)
    }
}

/// `10 log10(signal / error)`, capped at [`SNR_CAP_DB`].
pub fn estimate_snr(signal: f64, error: f64) -> f64 {
    if error <= 0.0 || signal / error > 10f64.powf(SNR_CAP_DB / 10.0) {
        return SNR_CAP_DB;
    }
    if signal <= 0.0 {
        return -SNR_CAP_DB;
    }
    (10.0 * (signal / error).log10()).min(SNR_CAP_DB)
}

/// Zero-forcing `Y / h` per subcarrier, then removal of the mean pilot
/// rotation against `known_pilots`.
pub fn equalize(y: &[C64], h: &[C64], plan: &SubcarrierPlan, known_pilots: &[C64]) -> Equalized {
    let occ_power = plan.occupied.iter().map(|&b| h[b].norm_sqr()).sum::<f64>() / plan.occupied.len().max(1) as f64;
    let floor = ERASURE_FLOOR * ERASURE_FLOOR * occ_power;
    let zf = |b: usize| -> Option<C64> {
        let hb = h[b];
        (hb.norm_sqr() > floor && hb.norm_sqr() > 0.0 && y[b].is_finite()).then(|| y[b] / hb)
    };
    let raw_pilots: Vec<Option<C64>> = plan.pilot.iter().map(|&b| zf(b)).collect();
    let rot: C64 = raw_pilots.iter().zip(known_pilots).filter_map(|(p, k)| p.map(|p| p * k.conj())).sum();
    let cpe = if rot.norm() > 0.0 { rot.arg() } else { 0.0 };
    let derot = C64::from_polar(1.0, -cpe);
    let mut erased = Vec::with_capacity(plan.data.len());
    let data = plan
        .data
        .iter()
        .map(|&b| match zf(b) {
            Some(v) => {
                erased.push(false);
                v * derot
            }
            None => {
                erased.push(true);
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let pilots = raw_pilots.iter().map(|p| p.map_or(C64::new(0.0, 0.0), |p| p * derot)).collect();
    Equalized { data, erased, pilots, cpe }
}
