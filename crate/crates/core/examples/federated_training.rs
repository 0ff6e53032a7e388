//! Federated averaging on a Dirichlet-partitioned synthetic task, with no
//! availability effects: every round picks 10 random clients.
//!
//! ```text
//! cargo run --release --example federated_training
//! ```

use fedsel::learning::{
    dirichlet_partition, evaluate, fedavg, local_train, LinearModel, LocalTraining, PartitionConfig,
    SyntheticTask,
};
use fedsel::rng::{derive_seed, seeded_rng};
use fedsel::selectors::select_random;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = SyntheticTask::default().generate(7)?;
    let clients = 100;
    let shards = dirichlet_partition(
        &data.train,
        data.num_classes,
        &PartitionConfig {
            num_clients: clients,
            alpha: 0.2,
            seed: 2,
        },
    )?;
    let sizes: Vec<usize> = shards.iter().map(Vec::len).collect();
    println!(
        "{} training rows over {clients} clients, shard sizes {}..{}",
        data.train.len(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );

    let opts = LocalTraining {
        epochs: 1,
        batch_size: 20,
        lr: 0.05,
    };
    let mut model = LinearModel::zeros(data.num_classes, data.dim());
    let mut rng = seeded_rng(1);
    let everyone: Vec<usize> = (0..clients).collect();
    for round in 0..200u64 {
        let picked = select_random(&everyone, 10, &mut rng)?;
        let deltas: Vec<Vec<f64>> = picked
            .iter()
            .map(|&c| local_train(&model, &data.train, &shards[c], &opts, derive_seed(round, &[c as u64])).delta)
            .collect();
        if let Some(mean) = fedavg(&deltas)? {
            model.apply_delta(&mean)?;
        }
        if (round + 1) % 25 == 0 {
            println!("round {:>3}: test accuracy {:.2}%", round + 1, 100.0 * evaluate(&model, &data.test));
        }
    }
    Ok(())
}
