//! CPU-time clocks, as opposed to wall-clock time.
//!
//! Workers time their evaluation loop with the thread CPU clock; the master
//! times itself with the process CPU clock. Both are monotonic counters of
//! processor time actually consumed, so a process that sleeps in a poll loop
//! accumulates almost none.

use std::time::Duration;

fn clock(id: libc::clockid_t) -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: ts is a valid out-pointer and both clock ids used below are
    // required to exist on the platforms we build for.
    let rc = unsafe { libc::clock_gettime(id, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime failed for clock {id}");
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// CPU time consumed by the whole process so far.
pub fn process_cpu_time() -> Duration {
    clock(libc::CLOCK_PROCESS_CPUTIME_ID)
}

/// CPU time consumed by the calling thread so far.
pub fn thread_cpu_time() -> Duration {
    clock(libc::CLOCK_THREAD_CPUTIME_ID)
}

/// Seconds elapsed on a CPU clock since `start`, never negative.
pub fn cpu_seconds_since(start: Duration, now: Duration) -> f64 {
    now.checked_sub(start).unwrap_or_default().as_secs_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clocks_are_monotonic() {
        let a = process_cpu_time();
        let b = process_cpu_time();
        assert!(b >= a);
        let a = thread_cpu_time();
        let b = thread_cpu_time();
        assert!(b >= a);
    }

    #[test]
    fn busy_loop_consumes_thread_cpu() {
        let start = thread_cpu_time();
        let mut acc = 0.0f64;
        for i in 0..2_000_000u64 {
            acc += (i as f64).sqrt();
        }
        std::hint::black_box(acc);
        let spent = cpu_seconds_since(start, thread_cpu_time());
        assert!(spent > 0.0);
    }

    #[test]
    fn sleeping_consumes_little_cpu() {
        let start = process_cpu_time();
        std::thread::sleep(Duration::from_millis(50));
        let spent = cpu_seconds_since(start, process_cpu_time());
        assert!(spent < 0.05);
    }
}
