"""tickguard: a synchronous-reactive kernel with a collision-warning
cruise controller built on top of it.

The package bundles five layers:

- kernel: tick-based execution of broadcast-signal programs
- controller: the warning/cruise logic, both as kernel programs and as
  plain functions
- fsm: compilation of pure-signal programs to Mealy automata, plus
  bisimulation minimization and DOT/text export
- verifier: emission-status and invariant checking over those automata
- sim: scenario replay of the full controller against sensor traces

service exposes the toolkit over HTTP, and cli wraps the same handlers
for terminal use.
"""

__version__ = "0.1.0"
