"""Dataset access layer.

A "database" here is a PhysioNet database on disk: a directory of WFDB header
and signal files plus the annotation manifest and optional group index. This
package holds the schemas describing its content and the repositories that
read it.
"""
