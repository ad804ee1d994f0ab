package org.apache.commons.csv;

public final class CSVFormat {
    public static final CSVFormat DEFAULT = new CSVFormat('"', "\r\n", true);

    private final char escape;
    private final String lineSeparator;
    private final boolean ignoreSurroundingSpaces;

    private CSVFormat(char escape, String lineSeparator, boolean ignoreSurroundingSpaces) {
        this.escape = escape;
        this.lineSeparator = lineSeparator;
        this.ignoreSurroundingSpaces = ignoreSurroundingSpaces;
    }

    /**
     * Returns the character used to escape delimiters and quotes.
     */
    public char getEscape() {
        return escape;
    }

    /**
     * Returns the line separator written after each record.
     */
    public String getLineSeparator() {
        return lineSeparator;
    }

    /**
     * Returns whether spaces around values are ignored when parsing.
     */
    public boolean isSurroundingSpacesIgnored() {
        return ignoreSurroundingSpaces;
    }
}
