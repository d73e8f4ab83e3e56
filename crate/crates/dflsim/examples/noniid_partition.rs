//! Label-sorted shard partition over the bundled MNIST training set: 200
//! shards of 300 images, two shards per device, so each of the 54 devices
//! sees at most four digit classes.
//!
//! ```text
//! cargo run --example noniid_partition
//! ```

use std::path::Path;

use dflsim::federated::partition_noniid;
use dflsim::harness::load_mnist_idx;

fn main() -> dflsim::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let train = load_mnist_idx(
        &root.join("train-images-idx3-ubyte.gz"),
        &root.join("train-labels-idx1-ubyte.gz"),
    )?;
    println!(
        "loaded {} samples of {} features",
        train.len(),
        train.n_features
    );

    let devices = partition_noniid(&train.labels, 54, 300, 42)?;
    let used: usize = devices.iter().map(|d| d.len()).sum();
    println!(
        "54 devices x 600 samples = {used} used, {} images left in undealt shards\n",
        train.len() - used
    );

    println!("device  samples  classes  label histogram");
    for (d, dev) in devices.iter().enumerate().take(8) {
        println!(
            "  {d:>4}  {:>7}  {:>7}  {:?}",
            dev.len(),
            dev.distinct_labels(),
            dev.label_histogram
        );
    }
    println!("   ...");

    let worst = devices.iter().map(|d| d.distinct_labels()).max().unwrap();
    println!("\nmost classes on any device: {worst} (bound is 4)");
    Ok(())
}
