"""Small incremental CDCL SAT solver.

Two-watched-literal propagation, 1-UIP clause learning, VSIDS-style
activities with deterministic tie-breaking, phase saving. Restarts are
disabled under the reproducibility flag (the default), so runs are fully
determined by the clause stream, the assumption order, and the seed used
to initialize branching activities.

Literals use the DIMACS convention externally (signed non-zero ints);
`solve` returns True/False, or None when a deadline or conflict budget is
exhausted.
"""

from __future__ import annotations

import heapq
import random
import time


class Solver:
    def __init__(self, seed=0, reproducible=True):
        self.nvars = 0
        self.clauses = []          # problem clauses (internal-lit lists)
        self.learnts = []
        self.watches = []          # lit -> list of clauses
        self.assigns = bytearray() # var -> 0 undef / 1 true / 2 false
        self.level = []
        self.reason = []
        self.phase = []
        self.activity = []
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.var_inc = 1.0
        self.heap = []             # lazy max-heap entries (-activity, var)
        self.unsat = False
        self.seed = seed
        self.reproducible = reproducible
        self._rng = random.Random(seed)
        self.stats_conflicts = 0
        self.stats_decisions = 0
        self.stats_propagations = 0

    # -- variables and clauses -------------------------------------------

    def new_var(self):
        self.nvars += 1
        self.assigns.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.phase.append(False)
        self.activity.append(self._rng.random() * 1e-9)
        self.watches.append([])
        self.watches.append([])
        heapq.heappush(self.heap, (-self.activity[-1], self.nvars - 1))
        return self.nvars

    def new_vars(self, n):
        base = self.nvars
        for _ in range(n):
            self.new_var()
        return base + 1

    def _ilit(self, ext):
        v = abs(ext) - 1
        if v >= self.nvars or ext == 0:
            raise ValueError(f"unknown literal {ext}")
        return (v << 1) | (1 if ext < 0 else 0)

    def add_clause(self, ext_lits):
        """Add a clause of DIMACS literals; returns False if the solver
        becomes trivially unsatisfiable."""
        if self.unsat:
            return False
        self._backtrack(0)
        lits = sorted({self._ilit(l) for l in ext_lits})
        out = []
        for l in lits:
            if (l ^ 1) in out:
                return True     # tautology
            a = self.assigns[l >> 1]
            if a == 0:
                out.append(l)
            elif a == 1 + (l & 1):
                return True     # satisfied at root
            # falsified at root: drop the literal
        if not out:
            self.unsat = True
            return False
        if len(out) == 1:
            return self._enqueue_root(out[0])
        c = out
        self.clauses.append(c)
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)
        return True

    def _enqueue_root(self, lit):
        a = self.assigns[lit >> 1]
        if a == 2 - (lit & 1):
            self.unsat = True
            return False
        if a == 0:
            self._assign(lit, None, 0)
        if self._propagate() is not None:
            self.unsat = True
            return False
        return True

    # -- assignment machinery ----------------------------------------------

    def _assign(self, lit, reason, lvl):
        v = lit >> 1
        self.assigns[v] = 1 + (lit & 1)
        self.level[v] = lvl
        self.reason[v] = reason
        self.trail.append(lit)

    def _backtrack(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        bound = self.trail_lim[lvl]
        assigns, phase = self.assigns, self.phase
        heap, activity = self.heap, self.activity
        for i in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            phase[v] = not (lit & 1)
            assigns[v] = 0
            self.reason[v] = None
            heapq.heappush(heap, (-activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _propagate(self):
        assigns = self.assigns
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            self.stats_propagations += 1
            lvl = len(self.trail_lim)
            flit = lit ^ 1
            ws = watches[flit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == flit:
                    c[0] = c[1]
                    c[1] = flit
                first = c[0]
                fa = assigns[first >> 1]
                if fa == 1 + (first & 1):
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if assigns[lk >> 1] != 2 - (lk & 1):
                        c[1] = lk
                        c[k] = flit
                        watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if fa == 2 - (first & 1):
                        while i < n:    # conflict: keep remaining watches
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return c
                    self._assign(first, c, lvl)
            del ws[j:]
        return None

    # -- learning -----------------------------------------------------------

    def _bump(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            inv = 1e-100
            for i in range(self.nvars):
                self.activity[i] *= inv
            self.var_inc *= inv

    def _analyze(self, conflict):
        seen = bytearray(self.nvars)
        learnt = [0]
        counter = 0
        cur_level = len(self.trail_lim)
        idx = len(self.trail) - 1
        c = conflict
        p = None
        while True:
            start = 0 if p is None else 1
            for q in c[start:]:
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] == cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            v = p >> 1
            c = self.reason[v]
            seen[v] = 0
            counter -= 1
            idx -= 1
            if counter == 0:
                break
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            bt = 0
        else:
            m = max(range(1, len(learnt)), key=lambda i: self.level[learnt[i] >> 1])
            learnt[1], learnt[m] = learnt[m], learnt[1]
            bt = self.level[learnt[1] >> 1]
        return learnt, bt

    def _reduce_db(self):
        keep = len(self.learnts) // 2
        survivors = sorted(self.learnts, key=len)[:keep]
        locked = {id(self.reason[l >> 1]) for l in self.trail
                  if self.reason[l >> 1] is not None}
        keepset = {id(c) for c in survivors} | locked
        dead = [c for c in self.learnts if id(c) not in keepset and len(c) > 2]
        if not dead:
            return
        deadset = {id(c) for c in dead}
        self.learnts = [c for c in self.learnts if id(c) not in deadset]
        for wl in self.watches:
            wl[:] = [c for c in wl if id(c) not in deadset]

    # -- search ---------------------------------------------------------------

    def solve(self, assumptions=(), deadline=None, max_conflicts=None):
        """Search under assumptions. True = SAT (model available via
        `value`), False = UNSAT, None = budget exhausted."""
        if self.unsat:
            return False
        self._backtrack(0)
        if self._propagate() is not None:
            self.unsat = True
            return False
        assume = [self._ilit(a) for a in assumptions]
        conflicts = 0
        check = 0
        var_decay = 1.0 / 0.95

        while True:
            confl = self._propagate()
            if confl is not None:
                self.stats_conflicts += 1
                conflicts += 1
                if len(self.trail_lim) == 0:
                    self.unsat = True
                    return False
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._backtrack(0)
                    a = self.assigns[learnt[0] >> 1]
                    if a == 2 - (learnt[0] & 1):
                        self.unsat = True
                        return False
                    if a == 0:
                        self._assign(learnt[0], None, 0)
                else:
                    self.learnts.append(learnt)
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    if self.assigns[learnt[0] >> 1] == 0:
                        self._assign(learnt[0], learnt, len(self.trail_lim))
                self.var_inc *= var_decay
                if len(self.learnts) > 20000 + 2 * len(self.clauses):
                    self._reduce_db()
                if max_conflicts is not None and conflicts >= max_conflicts:
                    self._backtrack(0)
                    return None
                check += 1
                if deadline is not None and check >= 64:
                    check = 0
                    if time.monotonic() > deadline:
                        self._backtrack(0)
                        return None
                continue

            # extend the assumption prefix one level at a time
            if len(self.trail_lim) < len(assume):
                lit = assume[len(self.trail_lim)]
                a = self.assigns[lit >> 1]
                if a == 2 - (lit & 1):
                    self._backtrack(0)
                    return False
                self.trail_lim.append(len(self.trail))
                if a == 0:
                    self._assign(lit, None, len(self.trail_lim))
                continue

            if len(self.trail) == self.nvars:
                return True

            # decide
            self.stats_decisions += 1
            heap = self.heap
            v = None
            while heap:
                negact, cand = heapq.heappop(heap)
                if self.assigns[cand] == 0 and -negact == self.activity[cand]:
                    v = cand
                    break
            if v is None:
                for cand in range(self.nvars):
                    if self.assigns[cand] == 0:
                        v = cand
                        break
                if v is None:
                    return True
            self.trail_lim.append(len(self.trail))
            lit = (v << 1) | (0 if self.phase[v] else 1)
            self._assign(lit, None, len(self.trail_lim))

            if deadline is not None:
                check += 1
                if check >= 512:
                    check = 0
                    if time.monotonic() > deadline:
                        self._backtrack(0)
                        return None

    def value(self, ext_var):
        """Model value of a variable after a SAT result."""
        a = self.assigns[ext_var - 1]
        if a == 0:
            raise ValueError(f"variable {ext_var} unassigned")
        return a == 1


def solve_clauses(nvars, clauses, assumptions=(), seed=0,
                  deadline=None, max_conflicts=None):
    """One-shot convenience wrapper; returns (result, model-or-None)."""
    s = Solver(seed=seed)
    if nvars:
        s.new_vars(nvars)
    for c in clauses:
        if not s.add_clause(c):
            return False, None
    res = s.solve(assumptions, deadline=deadline, max_conflicts=max_conflicts)
    if res:
        return True, [s.value(v) for v in range(1, nvars + 1)]
    return res, None
