use std::hint::black_box;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use tensorlite::parallel::set_thread_limit;
use tensorlite::Tensor;

const MIN_TIME: Duration = Duration::from_millis(200);
const MAX_REPS: u32 = 200;

struct Row {
    op: &'static str,
    size: String,
    /// Output elements per call.
    elems: f64,
    flops: f64,
}

/// Mean seconds per call, repeating until `MIN_TIME` has elapsed.
fn time_it(mut f: impl FnMut()) -> f64 {
    f();
    let start = Instant::now();
    let mut reps = 0;
    while reps < MAX_REPS && (reps == 0 || start.elapsed() < MIN_TIME) {
        f();
        reps += 1;
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn measure(row: &Row, f: &mut dyn FnMut()) -> [f64; 4] {
    set_thread_limit(Some(1));
    let single = time_it(&mut *f);
    set_thread_limit(None);
    let multi = time_it(&mut *f);
    [
        row.elems / single,
        row.flops / single / 1e9,
        row.elems / multi,
        row.flops / multi / 1e9,
    ]
}

pub fn run(w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "op,size,single_elems_per_s,single_gflops,multi_elems_per_s,multi_gflops")?;
    for n in [10_000usize, 1_000_000, 10_000_000] {
        let a = Tensor::uniform([n], -1.0, 1.0, 1);
        let b = Tensor::uniform([n], -1.0, 1.0, 2);
        let size = n.to_string();
        let ops: [(&'static str, Box<dyn FnMut()>); 3] = [
            ("add", Box::new(|| drop(black_box(a.add(&b).expect("same shape"))))),
            ("mul", Box::new(|| drop(black_box(a.mul(&b).expect("same shape"))))),
            ("sum", Box::new(|| drop(black_box(a.sum_all().expect("nonempty"))))),
        ];
        for (op, mut f) in ops {
            let row = Row {
                op,
                size: size.clone(),
                elems: n as f64,
                flops: n as f64,
            };
            write_row(w, &row, measure(&row, &mut f))?;
        }
    }
    for n in [64usize, 256, 512] {
        let x = Tensor::uniform([n, n], -1.0, 1.0, 3);
        let y = Tensor::uniform([n, n], -1.0, 1.0, 4);
        let row = Row {
            op: "matmul",
            size: format!("{n}x{n}"),
            elems: (n * n) as f64,
            flops: 2.0 * (n * n * n) as f64,
        };
        let mut f = || drop(black_box(x.matmul(&y).expect("square")));
        write_row(w, &row, measure(&row, &mut f))?;
    }
    Ok(())
}

fn write_row(w: &mut dyn Write, row: &Row, m: [f64; 4]) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{:.3e},{:.3},{:.3e},{:.3}",
        row.op, row.size, m[0], m[1], m[2], m[3]
    )
}
