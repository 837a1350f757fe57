"""Parse and elaborate SystemVerilog files with pyslang; exit 1 on any error."""

import sys

import pyslang


def lint(path):
    tree = pyslang.syntax.SyntaxTree.fromFile(path)
    comp = pyslang.ast.Compilation()
    comp.addSyntaxTree(tree)
    diags = list(tree.diagnostics) + list(comp.getAllDiagnostics())
    errors = [d for d in diags if d.isError()]
    if errors:
        print(pyslang.DiagnosticEngine.reportAll(comp.sourceManager, errors))
    return len(errors)


def main(argv):
    if not argv:
        print("usage: sv_lint.py FILE.sv...", file=sys.stderr)
        return 2
    bad = 0
    for path in argv:
        n = lint(path)
        print(f"{path}: {n} errors")
        bad += n
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
