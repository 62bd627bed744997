// The block and interleaved bilinear decoders, and how they relate.

use hetlink::model::{block_permutation, decode_block, decode_interleave};

pub fn run_example() -> hetlink::Result<()> {
    let layer0 = ([1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 2.0, 1.0]);
    let layer1 = ([-2.0, 1.0], [3.0, 0.5]);
    let src = [&layer0.0[..], &layer1.0[..]].concat();
    let dst = [&layer0.1[..], &layer1.1[..]].concat();

    let whole = decode_interleave(&src, &dst)?;
    let parts = decode_interleave(&layer0.0, &layer0.1)? + decode_interleave(&layer1.0, &layer1.1)?;
    println!("interleave over the concatenation {whole}, sum over layers {parts}");

    // the block decoder splits at the midpoint, so concatenated layers get mixed
    println!("block decoder on the concatenation {}", decode_block(&src, &dst)?);

    let p = block_permutation(src.len())?;
    let permute = |v: &[f64]| p.iter().map(|&i| v[i]).collect::<Vec<_>>();
    println!("block decoder after permuting {}", decode_block(&permute(&src), &permute(&dst))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
