use crate::model::{ChainState, PanelDataset};

/// Panel with `y_it = i + t`, no covariates, stations 1 degree apart.
pub(crate) fn tiny_panel(n: usize, times: usize) -> PanelDataset {
    PanelDataset::new(
        n,
        times,
        0,
        (0..n * times).map(|c| (c / times + c % times) as f64).collect(),
        vec![true; n * times],
        vec![],
        (0..n).map(|i| (-30.0 - i as f64, -70.0)).collect(),
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..times).map(|t| t.to_string()).collect(),
        vec![],
    )
    .unwrap()
}

/// State with everyone in the first cluster, zero sticks and unit scales.
pub(crate) fn tiny_state(n: usize, times: usize, h: usize) -> (ChainState, PanelDataset) {
    let mut st = ChainState {
        n,
        times,
        h,
        s: vec![0; n * times],
        theta: (0..h).map(|k| 10.0 * k as f64).collect(),
        sigma_sq: vec![1.0; h],
        eps: vec![0.0; h * times],
        lambda: vec![1.0; h],
        xi: vec![0.0; h * times],
        alpha: 1.0,
        psi: 0.0,
        beta: vec![],
        gamma: vec![0.0; n],
        tau_sq: 1.0,
        phi: 1.0,
        rho_sq: 1.0,
        weights: vec![0.0; h * times],
    };
    st.refresh_weights();
    (st, tiny_panel(n, times))
}
