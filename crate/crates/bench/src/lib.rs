//! Criterion benchmarks for `cellload`. See `benches/`.

use cellload::NetworkModel;
use cellload::UserModel;

/// Thomas-cluster network used by the benchmarks.
pub fn thomas_network(sigma: f64) -> NetworkModel {
    NetworkModel::new(1.0, UserModel::thomas(5.0, 5.0, sigma).expect("valid users")).expect("valid network")
}
