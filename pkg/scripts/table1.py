"""Print the minimum target-block sizes for T1 = 1..10 and the standard xi grid."""

from ipram.cli import format_table1
from ipram.planner import reproduce_table1

if __name__ == "__main__":
    print(format_table1(reproduce_table1()), end="")
