"""Result files and the results document."""
