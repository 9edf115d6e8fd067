//! Best-effort real-time scheduling for the processing thread.

/// Raises the calling thread to `SCHED_FIFO` while alive and restores the
/// previous policy on drop. Without the privilege it does nothing.
pub(crate) struct RealtimeGuard {
    #[cfg(target_os = "linux")]
    previous: Option<(libc::c_int, libc::sched_param)>,
}

#[cfg(target_os = "linux")]
const FIFO_PRIORITY: libc::c_int = 10;

impl RealtimeGuard {
    #[cfg(target_os = "linux")]
    pub(crate) fn acquire() -> Self {
        // SAFETY: plain syscalls on the current thread with valid pointers.
        unsafe {
            let thread = libc::pthread_self();
            let mut policy = 0;
            let mut param: libc::sched_param = std::mem::zeroed();
            if libc::pthread_getschedparam(thread, &mut policy, &mut param) != 0 {
                return Self { previous: None };
            }
            let fifo = libc::sched_param {
                sched_priority: FIFO_PRIORITY,
            };
            match libc::pthread_setschedparam(thread, libc::SCHED_FIFO, &fifo) {
                0 => {
                    log::debug!("processing thread running SCHED_FIFO {FIFO_PRIORITY}");
                    Self {
                        previous: Some((policy, param)),
                    }
                }
                err => {
                    log::info!("no real-time scheduling (error {err}); running at normal priority");
                    Self { previous: None }
                }
            }
        }
    }

    #[cfg(not(target_os = "linux"))]
    pub(crate) fn acquire() -> Self {
        Self {}
    }
}

#[cfg(target_os = "linux")]
impl Drop for RealtimeGuard {
    fn drop(&mut self) {
        if let Some((policy, param)) = self.previous {
            // SAFETY: restores the values read in `acquire` on the same thread.
            unsafe {
                libc::pthread_setschedparam(libc::pthread_self(), policy, &param);
            }
        }
    }
}
