//! Child-process execution with a wall-clock limit and resource accounting.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

/// What happened to one child process.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Exit code; `None` when the child died from a signal.
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub wall: Duration,
    pub user: Duration,
    pub sys: Duration,
    /// Peak resident set size reported by the kernel, if available.
    pub max_rss_bytes: Option<u64>,
    pub timed_out: bool,
}

impl RunOutcome {
    pub fn success(&self) -> bool {
        !self.timed_out && self.exit_code == Some(0)
    }

    /// Exit code with signals folded in shell style (128 + signo).
    pub fn code_or_signal(&self) -> i32 {
        match (self.exit_code, self.signal) {
            (Some(c), _) => c,
            (None, Some(s)) => 128 + s,
            (None, None) => -1,
        }
    }

    pub fn stdout_lossy(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }

    pub fn stderr_lossy(&self) -> String {
        String::from_utf8_lossy(&self.stderr).into_owned()
    }
}

/// Spawns `cmd`, feeds `stdin`, and waits at most `timeout`. The child is
/// killed when the limit expires. Spawn failures are returned as `Err`.
pub fn run(mut cmd: Command, stdin: &[u8], timeout: Duration) -> std::io::Result<RunOutcome> {
    cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    // own process group so a timeout also takes down grandchildren
    cmd.process_group(0);
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;

    let mut child_stdin = child.stdin.take();
    let input = stdin.to_vec();
    let writer = thread::spawn(move || {
        if let Some(pipe) = child_stdin.as_mut() {
            // the child may exit without reading; a broken pipe is fine
            let _ = pipe.write_all(&input);
        }
        drop(child_stdin);
    });
    let mut out_pipe = child.stdout.take();
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(p) = out_pipe.as_mut() {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    });
    let mut err_pipe = child.stderr.take();
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(p) = err_pipe.as_mut() {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    });

    let mut timed_out = false;
    let mut poll = Duration::from_micros(500);
    let (status, usage) = loop {
        let mut status: libc::c_int = 0;
        // SAFETY: zeroed rusage is a valid out-parameter for wait4.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        // SAFETY: pid is our own unreaped child; pointers are to live locals.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            break (status, usage);
        }
        if r < 0 {
            let err = std::io::Error::last_os_error();
            if err.kind() == std::io::ErrorKind::Interrupted {
                continue;
            }
            return Err(err);
        }
        if !timed_out && start.elapsed() >= timeout {
            timed_out = true;
            // SAFETY: signalling our own process group.
            unsafe { libc::kill(-pid, libc::SIGKILL) };
            let _ = child.kill();
        }
        thread::sleep(poll);
        poll = (poll * 2).min(Duration::from_millis(10));
    };
    let wall = start.elapsed();

    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();

    let (exit_code, signal) = if libc::WIFEXITED(status) {
        (Some(libc::WEXITSTATUS(status)), None)
    } else if libc::WIFSIGNALED(status) {
        (None, Some(libc::WTERMSIG(status)))
    } else {
        (None, None)
    };
    let tv = |t: libc::timeval| Duration::new(t.tv_sec as u64, (t.tv_usec as u32) * 1000);
    // ru_maxrss is in kilobytes on Linux
    let max_rss_bytes = (usage.ru_maxrss > 0).then(|| usage.ru_maxrss as u64 * 1024);
    Ok(RunOutcome {
        exit_code,
        signal,
        stdout,
        stderr,
        wall,
        user: tv(usage.ru_utime),
        sys: tv(usage.ru_stime),
        max_rss_bytes,
        timed_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_output_and_stdin() {
        let mut c = Command::new("sh");
        c.args(["-c", "cat; echo err >&2; exit 3"]);
        let o = run(c, b"hello", Duration::from_secs(10)).unwrap();
        assert_eq!(o.stdout, b"hello");
        assert_eq!(o.stderr_lossy(), "err\n");
        assert_eq!(o.exit_code, Some(3));
        assert!(!o.success());
    }

    #[test]
    fn kills_on_timeout() {
        let mut c = Command::new("sleep");
        c.arg("5");
        let o = run(c, b"", Duration::from_millis(100)).unwrap();
        assert!(o.timed_out);
        assert!(o.wall < Duration::from_secs(4));
        assert_eq!(o.signal, Some(libc::SIGKILL));
    }

    #[test]
    fn spawn_failure_is_err() {
        assert!(run(Command::new("/nonexistent/tool"), b"", Duration::from_secs(1)).is_err());
    }
}
