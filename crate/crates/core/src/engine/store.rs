use crate::model::Time;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum Presence {
    Unknown,
    Present,
    Absent,
}

/// Bounds of one interval. Time bounds are meaningful only while the
/// interval is not absent; for an optional interval they hold under the
/// assumption that it is present.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) struct Dom {
    pub pres: Presence,
    pub smin: Time,
    pub smax: Time,
    pub emin: Time,
    pub emax: Time,
    pub lmin: Time,
    pub lmax: Time,
    /// Search-only: start minimum at the time the interval was postponed.
    pub postponed: Option<Time>,
}

impl Dom {
    pub fn is_fixed(&self) -> bool {
        self.smin == self.smax && self.emin == self.emax
    }

    fn is_empty(&self) -> bool {
        self.smin > self.smax || self.emin > self.emax || self.lmin > self.lmax
    }

    fn normalize(&mut self) {
        loop {
            let before = *self;
            self.emin = self.emin.max(self.smin + self.lmin);
            self.smin = self.smin.max(self.emin - self.lmax);
            self.emax = self.emax.min(self.smax + self.lmax);
            self.smax = self.smax.min(self.emax - self.lmin);
            self.lmin = self.lmin.max(self.emin - self.smax);
            self.lmax = self.lmax.min(self.emax - self.smin);
            if *self == before || self.is_empty() {
                break;
            }
        }
    }
}

#[derive(Debug)]
pub(crate) struct Fail;

pub(crate) type PResult = Result<(), Fail>;

#[derive(Clone)]
pub(crate) struct Store {
    doms: Vec<Dom>,
    trail: Vec<(u32, Dom)>,
    stamp: Vec<u64>,
    epoch: u64,
    changed: Vec<u32>,
    queued: Vec<bool>,
}

impl Store {
    pub fn new(doms: Vec<Dom>) -> Self {
        let n = doms.len();
        let mut s = Store {
            doms,
            trail: Vec::new(),
            stamp: vec![0; n],
            epoch: 1,
            changed: Vec::new(),
            queued: vec![false; n],
        };
        for d in &mut s.doms {
            d.normalize();
        }
        s
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Dom {
        &self.doms[i]
    }

    pub fn doms(&self) -> &[Dom] {
        &self.doms
    }

    pub fn len(&self) -> usize {
        self.doms.len()
    }

    /// Marks a save point; returns the trail length to restore to.
    pub fn save(&mut self) -> usize {
        self.epoch += 1;
        self.trail.len()
    }

    pub fn restore(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (i, d) = self.trail.pop().expect("trail underflow");
            self.doms[i as usize] = d;
        }
        self.epoch += 1;
        for &i in &self.changed {
            self.queued[i as usize] = false;
        }
        self.changed.clear();
    }

    pub fn take_changed(&mut self) -> Vec<u32> {
        for &i in &self.changed {
            self.queued[i as usize] = false;
        }
        std::mem::take(&mut self.changed)
    }

    fn write(&mut self, i: usize, d: Dom) {
        if self.stamp[i] != self.epoch {
            self.stamp[i] = self.epoch;
            self.trail.push((i as u32, self.doms[i]));
        }
        self.doms[i] = d;
        if !self.queued[i] {
            self.queued[i] = true;
            self.changed.push(i as u32);
        }
    }

    /// Installs tightened bounds; an empty result removes an optional
    /// interval and fails on a present one.
    fn commit(&mut self, i: usize, mut d: Dom) -> PResult {
        d.normalize();
        if d.is_empty() {
            return self.set_absent(i);
        }
        if d != self.doms[i] {
            self.write(i, d);
        }
        Ok(())
    }

    pub fn set_absent(&mut self, i: usize) -> PResult {
        let d = self.doms[i];
        match d.pres {
            Presence::Absent => Ok(()),
            Presence::Present => Err(Fail),
            Presence::Unknown => {
                self.write(i, Dom { pres: Presence::Absent, ..d });
                Ok(())
            }
        }
    }

    pub fn set_present(&mut self, i: usize) -> PResult {
        let d = self.doms[i];
        match d.pres {
            Presence::Present => Ok(()),
            Presence::Absent => Err(Fail),
            Presence::Unknown => {
                self.write(i, Dom { pres: Presence::Present, ..d });
                Ok(())
            }
        }
    }

    pub fn set_postponed(&mut self, i: usize, at: Option<Time>) {
        let d = self.doms[i];
        if d.postponed != at {
            if self.stamp[i] != self.epoch {
                self.stamp[i] = self.epoch;
                self.trail.push((i as u32, d));
            }
            self.doms[i].postponed = at;
        }
    }

    pub fn set_smin(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v <= d.smin {
            return Ok(());
        }
        self.commit(i, Dom { smin: v, ..d })
    }

    pub fn set_smax(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v >= d.smax {
            return Ok(());
        }
        self.commit(i, Dom { smax: v, ..d })
    }

    pub fn set_emin(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v <= d.emin {
            return Ok(());
        }
        self.commit(i, Dom { emin: v, ..d })
    }

    pub fn set_emax(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v >= d.emax {
            return Ok(());
        }
        self.commit(i, Dom { emax: v, ..d })
    }

    pub fn set_lmin(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v <= d.lmin {
            return Ok(());
        }
        self.commit(i, Dom { lmin: v, ..d })
    }

    pub fn set_lmax(&mut self, i: usize, v: Time) -> PResult {
        let d = self.doms[i];
        if d.pres == Presence::Absent || v >= d.lmax {
            return Ok(());
        }
        self.commit(i, Dom { lmax: v, ..d })
    }
}
